"""Command-line pipeline runner.

Each stage is exposed as a subcommand and can either recompute its inputs
from the scenario or consume the previous stage's files, so partial pipelines
compose:

    semcast significance --scenario case.json --out-dir out/
    semcast cluster      --scenario case.json --mode semantic --out-dir out/
    semcast transcode    --scenario case.json --mode semantic --plan out/plan.csv --out-dir out/
    semcast schedule     --scenario case.json --plan out/plan.csv --levels out/levels.csv --out-dir out/
    semcast qoe          --scenario case.json --plan out/plan.csv --levels out/levels.csv --out-dir out/
    semcast run          --scenario case.json --cluster-mode semantic --transcode-mode semantic --out-dir out/
    semcast compare      --scenario case.json --out-dir out/
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import artifacts
from .clustering import balance_report, decide_clusters
from .errors import SemcastError
from .imaging import load_png, synthetic_frame
from .pipeline import (
    MODE_PAIRS,
    RunConfig,
    compare,
    evaluate,
    run_pipeline,
    transcode_all,
    write_compare_csv,
)
from .qoe import DEFAULT_LATE_PENALTY, qoe_report
from .scene import load_scenario
from .scheduling import foreground_tiles, schedule, user_progress
from .significance import compute_significance_set
from .transcode import GaParams, avg_level_by_significance


def _add_scenario(p):
    p.add_argument("--scenario", required=True, help="scenario JSON path")
    p.add_argument("--out-dir", default="out", help="artifact directory")


def _add_ga(p):
    p.add_argument("--population", type=int, default=64)
    p.add_argument("--generations", type=int, default=200)
    p.add_argument("--crossover-rate", type=float, default=0.9)
    p.add_argument("--mutation-rate", type=float, default=0.05)
    p.add_argument("--elitism", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exact", action="store_true", help="use the exhaustive solver")
    p.add_argument(
        "--objective-unit", choices=("index", "scale"), default="index",
        help="score levels by ladder index or by resolution fraction",
    )


def _ga_params(args) -> GaParams:
    return GaParams(
        population_size=args.population,
        generations=args.generations,
        crossover_rate=args.crossover_rate,
        mutation_rate=args.mutation_rate,
        elitism_count=args.elitism,
        rng_seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semcast",
        description="Semantic-aware multicast delivery simulator for tiled frames",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("significance", help="per-BS and global significance maps")
    _add_scenario(p)
    p.add_argument("--heatmap", action="store_true", help="also write grayscale heatmaps")

    p = sub.add_parser("cluster", help="multicast cluster decision")
    _add_scenario(p)
    p.add_argument("--mode", choices=("semantic", "conventional"), default="semantic")

    p = sub.add_parser("transcode", help="per-BS level optimization")
    _add_scenario(p)
    p.add_argument("--mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--plan", help="plan.csv from the cluster stage (recomputed if absent)")
    p.add_argument("--cluster-mode", choices=("semantic", "conventional"), default="semantic",
                   help="cluster mode when --plan is not given")
    p.add_argument("--bs", help="only emit the assignment of one BS")
    p.add_argument("--buckets", type=int, default=5)
    _add_ga(p)

    p = sub.add_parser("schedule", help="slot scheduling of clusters")
    _add_scenario(p)
    p.add_argument("--plan", help="plan.csv (recomputed if absent)")
    p.add_argument("--levels", help="levels.csv (recomputed if absent)")
    p.add_argument("--cluster-mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--transcode-mode", choices=("semantic", "conventional"), default="semantic")
    _add_ga(p)

    p = sub.add_parser("qoe", help="experience metrics of a schedule")
    _add_scenario(p)
    p.add_argument("--plan", help="plan.csv (recomputed if absent)")
    p.add_argument("--levels", help="levels.csv (recomputed if absent)")
    p.add_argument("--cluster-mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--transcode-mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--gamma", type=float, default=DEFAULT_LATE_PENALTY)
    _add_ga(p)

    p = sub.add_parser("run", help="full pipeline with artifact set")
    _add_scenario(p)
    p.add_argument("--cluster-mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--transcode-mode", choices=("semantic", "conventional"), default="semantic")
    p.add_argument("--gamma", type=float, default=DEFAULT_LATE_PENALTY)
    p.add_argument("--image", help="source PNG (synthetic frame if absent)")
    p.add_argument("--no-image", action="store_true", help="skip the image stage")
    p.add_argument("--heatmap", action="store_true")
    p.add_argument("--buckets", type=int, default=5)
    _add_ga(p)

    p = sub.add_parser("compare", help="all four cluster/transcode mode pairs")
    _add_scenario(p)
    p.add_argument("--gamma", type=float, default=DEFAULT_LATE_PENALTY)
    p.add_argument("--image", help="source PNG (synthetic frame if absent)")
    p.add_argument("--no-image", action="store_true")
    p.add_argument("--buckets", type=int, default=5)
    _add_ga(p)
    return parser


def _cmd_significance(args) -> int:
    scenario = load_scenario(args.scenario)
    sig = compute_significance_set(scenario)
    out = artifacts.ensure_dir(args.out_dir)
    artifacts.write_significance_csv(out / "sig_global.csv", sig.global_map)
    for bs_id in scenario.topology.bs_ids():
        artifacts.write_significance_csv(out / f"sig_{bs_id}.csv", sig.per_bs[bs_id])
        if args.heatmap:
            artifacts.write_heatmap_png(
                out / f"sig_{bs_id}.png", sig.per_bs[bs_id],
                scenario.grid.rows, scenario.grid.cols,
            )
    print(f"significance maps for {len(scenario.topology.bs_ids())} BSs -> {out}")
    return 0


def _cmd_cluster(args) -> int:
    scenario = load_scenario(args.scenario)
    sig = compute_significance_set(scenario)
    plan = decide_clusters(scenario, args.mode, sig)
    report = balance_report(plan, scenario, args.mode, sig)
    out = artifacts.ensure_dir(args.out_dir)
    artifacts.write_plan_csv(out / "plan.csv", plan)
    artifacts.write_balance_json(out / "balance.json", report)
    print(f"{args.mode} plan: {len(plan.decisions)} tiles, dispersion {report.dispersion:.6f}")
    return 0


def _load_or_compute_plan(args, scenario, sig):
    if getattr(args, "plan", None):
        return artifacts.read_plan_csv(args.plan)
    return decide_clusters(scenario, args.cluster_mode, sig)


def _cmd_transcode(args) -> int:
    scenario = load_scenario(args.scenario)
    sig = compute_significance_set(scenario)
    plan = _load_or_compute_plan(args, scenario, sig)
    fg = foreground_tiles(scenario, sig)
    assignments = transcode_all(
        scenario, plan, sig, fg, args.mode, _ga_params(args), args.seed, args.exact,
        args.objective_unit,
    )
    if args.bs is not None:
        if args.bs not in assignments:
            raise SemcastError(f"[transcode] unknown BS {args.bs}")
        assignments = {args.bs: assignments[args.bs]}
    out = artifacts.ensure_dir(args.out_dir)
    artifacts.write_levels_csv(out / "levels.csv", assignments)
    buckets = {
        bs: avg_level_by_significance(assignments[bs], sig.per_bs[bs], args.buckets)
        for bs in assignments
    }
    artifacts.write_buckets_csv(out / "buckets.csv", buckets)
    n = sum(len(a) for a in assignments.values())
    print(f"{args.mode} transcoding: {n} tile assignments -> {out}")
    return 0


def _scheduled(args, scenario, sig):
    plan = _load_or_compute_plan(args, scenario, sig)
    if getattr(args, "levels", None):
        assignments = artifacts.read_levels_csv(args.levels)
    else:
        fg = foreground_tiles(scenario, sig)
        assignments = transcode_all(
            scenario, plan, sig, fg, args.transcode_mode, _ga_params(args), args.seed,
            args.exact, args.objective_unit,
        )
    sched = schedule(plan, assignments, scenario, sig)
    return plan, assignments, sched


def _cmd_schedule(args) -> int:
    scenario = load_scenario(args.scenario)
    sig = compute_significance_set(scenario)
    plan, _, sched = _scheduled(args, scenario, sig)
    progress = user_progress(sched, plan, scenario, sig)
    out = artifacts.ensure_dir(args.out_dir)
    artifacts.write_slots_csv(out / "slots.csv", sched)
    artifacts.write_progress_json(out / "progress.json", progress)
    late = sum(1 for c in sched.clusters if c.late)
    print(f"scheduled {len(sched.clusters)} clusters ({late} late) -> {out}")
    return 0


def _cmd_qoe(args) -> int:
    scenario = load_scenario(args.scenario)
    sig = compute_significance_set(scenario)
    plan, _, sched = _scheduled(args, scenario, sig)
    progress = user_progress(sched, plan, scenario, sig)
    report = qoe_report(sched, progress, sig.global_map, scenario.ladder, args.gamma)
    out = artifacts.ensure_dir(args.out_dir)
    artifacts.write_qoe_json(out / "qoe.json", report)
    print(
        f"weighted_resolution {report.weighted_resolution:.4f}, "
        f"smoothness_min {report.smoothness_min:.4f}, "
        f"synchronization {report.synchronization_s * 1000:.1f} ms"
    )
    return 0


def _cmd_run(args) -> int:
    config = RunConfig(
        scenario_path=args.scenario,
        cluster_mode=args.cluster_mode,
        transcode_mode=args.transcode_mode,
        seed=args.seed,
        gamma=args.gamma,
        out_dir=args.out_dir,
        image_path=args.image,
        ga=_ga_params(args),
        exact=args.exact,
        objective_unit=args.objective_unit,
        bucket_count=args.buckets,
        include_image=not args.no_image,
        heatmaps=args.heatmap,
    )
    result = run_pipeline(config)
    print(
        f"run {args.cluster_mode}/{args.transcode_mode}: "
        f"weighted_resolution {result.qoe.weighted_resolution:.4f} -> {args.out_dir}"
    )
    return 0


def _cmd_compare(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.no_image:
        source = None
    elif args.image:
        source = load_png(args.image)
    else:
        source = synthetic_frame(scenario.grid.frame_width, scenario.grid.frame_height, seed=7)
    rows = compare(
        scenario,
        seed=args.seed,
        gamma=args.gamma,
        ga=_ga_params(args),
        exact=args.exact,
        objective_unit=args.objective_unit,
        bucket_count=args.buckets,
        source_image=source,
    )
    out = artifacts.ensure_dir(args.out_dir)
    write_compare_csv(out / "compare.csv", rows, bucket_count=args.buckets)
    for r in rows:
        wp = f"{r.weighted_psnr_db:.3f} dB" if r.weighted_psnr_db is not None else "n/a"
        print(
            f"{r.cluster_mode:>12}/{r.transcode_mode:<12} "
            f"wres {r.weighted_resolution:.4f}  wpsnr {wp}"
        )
    return 0


_COMMANDS = {
    "significance": _cmd_significance,
    "cluster": _cmd_cluster,
    "transcode": _cmd_transcode,
    "schedule": _cmd_schedule,
    "qoe": _cmd_qoe,
    "run": _cmd_run,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SemcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
