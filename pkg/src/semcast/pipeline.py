"""End-to-end delivery pipeline and the 2x2 mode comparison harness.

Stage order: significance -> cluster decision -> background drop ->
per-BS transcoding -> slot scheduling -> experience metrics -> image metrics.
One seed drives every random choice (per-BS GA seeds derive from it), so a
run is reproducible byte for byte.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import artifacts
from .clustering import (
    CONVENTIONAL,
    SEMANTIC,
    BalanceReport,
    ClusterPlan,
    balance_report,
    decide_clusters,
)
from .errors import SemcastError
from .hetnet import bs_budget_bits
from .imaging import (
    apply_levels,
    load_png,
    per_tile_psnr,
    psnr,
    quantize,
    resample_tile,
    synthetic_frame,
    weighted_psnr,
)
from .qoe import DEFAULT_LATE_PENALTY, QoEReport, qoe_report
from .scene import Scenario, TileId, load_scenario
from .scheduling import Schedule, UserProgress, foreground_tiles, schedule, user_progress
from .significance import SignificanceSet, compute_significance_set
from .transcode import (
    GaParams,
    LevelAssignment,
    avg_level_buckets,
    optimize_levels_exact,
    optimize_levels_ga,
    top_bucket_mean,
)

MODE_PAIRS = (
    (SEMANTIC, SEMANTIC),
    (SEMANTIC, CONVENTIONAL),
    (CONVENTIONAL, SEMANTIC),
    (CONVENTIONAL, CONVENTIONAL),
)


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str
    cluster_mode: str = SEMANTIC
    transcode_mode: str = SEMANTIC
    seed: int = 0
    gamma: float = DEFAULT_LATE_PENALTY
    out_dir: str = "out"
    image_path: Optional[str] = None
    ga: GaParams = field(default_factory=GaParams)
    exact: bool = False
    objective_unit: str = "index"
    bucket_count: int = 5
    include_image: bool = True
    heatmaps: bool = False

    def to_json_dict(self) -> dict:
        # out_dir names where artifacts land, not what the run computes, so it
        # stays out of the recorded config (and its hash).
        doc = asdict(self)
        doc.pop("out_dir")
        doc["scenario_path"] = str(self.scenario_path)
        if self.image_path is not None:
            doc["image_path"] = str(self.image_path)
        return doc


@dataclass
class ImageMetrics:
    psnr_db: float
    weighted_psnr_db: float
    per_delivery_psnr: dict[tuple[str, TileId, int], float]
    mosaic: np.ndarray
    source: np.ndarray


@dataclass
class PipelineResult:
    scenario: Scenario
    sig: SignificanceSet
    foreground: frozenset[TileId]
    plan: ClusterPlan
    balance: BalanceReport
    balance_significance: BalanceReport
    assignments: dict[str, LevelAssignment]
    sched: Schedule
    progress: dict[str, UserProgress]
    qoe: QoEReport
    bucket_means: list[Optional[float]]
    per_bs_buckets: dict[str, list[Optional[float]]]
    image: Optional[ImageMetrics]
    elapsed_s: float


def _stage(name: str):
    """Re-raise module errors with the failing stage in the message."""

    class _ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and isinstance(exc, SemcastError):
                raise type(exc)(f"[{name}] {exc}") from exc
            return False

    return _ctx()


def transcode_all(
    scenario: Scenario,
    plan: ClusterPlan,
    sig: SignificanceSet,
    foreground: frozenset[TileId],
    mode: str,
    ga: GaParams,
    seed: int,
    exact: bool,
    unit: str = "index",
) -> dict[str, LevelAssignment]:
    """Per-BS level optimization over the foreground tiles each BS serves."""
    out: dict[str, LevelAssignment] = {}
    for idx, bs_id in enumerate(scenario.topology.bs_ids()):
        tiles = [t for t in plan.tiles_of_bs(bs_id) if t in foreground]
        weights = sig.per_bs[bs_id]
        budget_bits = bs_budget_bits(bs_id, scenario.topology, scenario.budget).total_bits
        if not tiles:
            out[bs_id] = {}
            continue
        if exact:
            out[bs_id] = optimize_levels_exact(
                tiles, weights, budget_bits, scenario.ladder, scenario.budget, mode, unit
            )
        else:
            params = replace(ga, rng_seed=seed + idx)
            out[bs_id] = optimize_levels_ga(
                tiles, weights, budget_bits, scenario.ladder, scenario.budget, mode,
                params, unit
            )
    return out


def delivery_pairs(
    scenario: Scenario,
    sig: SignificanceSet,
    assignments: dict[str, LevelAssignment],
) -> list[tuple[str, TileId, int, float]]:
    """(bs, tile, level, serving-BS weight) per delivery, in canonical order."""
    rows = []
    for bs_id in scenario.topology.bs_ids():
        for tile in sorted(assignments.get(bs_id, {})):
            rows.append((bs_id, tile, assignments[bs_id][tile], sig.per_bs[bs_id][tile]))
    return rows


def image_metrics(
    scenario: Scenario,
    sig: SignificanceSet,
    assignments: dict[str, LevelAssignment],
    source: np.ndarray,
) -> ImageMetrics:
    """Delivery-weighted PSNR plus an illustrative best-copy mosaic."""
    grid = scenario.grid
    cache: dict[tuple[TileId, int], float] = {}

    def tile_level_psnr(tile: TileId, level: int) -> float:
        key = (tile, level)
        if key not in cache:
            x0, y0, x1, y1 = grid.tile_pixel_box(tile)
            block = source[y0:y1, x0:x1]
            recon = quantize(resample_tile(block.astype(np.float64), scenario.ladder.scale(level)))
            cache[key] = psnr(block, recon)
        return cache[key]

    per_delivery: dict[tuple[str, TileId, int], float] = {}
    num = 0.0
    den = 0.0
    for bs_id, tile, level, _ in delivery_pairs(scenario, sig, assignments):
        value = tile_level_psnr(tile, level)
        per_delivery[(bs_id, tile, level)] = value
        w = sig.global_map[tile]
        num += w * value
        den += w
    wpsnr = num / den if den > 0 else float("nan")

    best_level: dict[TileId, int] = {}
    for bs_id, tile, level, _ in delivery_pairs(scenario, sig, assignments):
        best_level[tile] = max(best_level.get(tile, 0), level)
    mosaic = apply_levels(source, grid, best_level, scenario.ladder)
    return ImageMetrics(
        psnr_db=psnr(source, mosaic),
        weighted_psnr_db=wpsnr,
        per_delivery_psnr=per_delivery,
        mosaic=mosaic,
        source=source,
    )


def evaluate(
    scenario: Scenario,
    cluster_mode: str,
    transcode_mode: str,
    seed: int = 0,
    gamma: float = DEFAULT_LATE_PENALTY,
    ga: Optional[GaParams] = None,
    exact: bool = False,
    objective_unit: str = "index",
    bucket_count: int = 5,
    source_image: Optional[np.ndarray] = None,
) -> PipelineResult:
    """Run the full pipeline in memory on an already-loaded scenario."""
    t0 = time.perf_counter()
    ga = ga or GaParams()
    with _stage("significance"):
        sig = compute_significance_set(scenario)
        foreground = foreground_tiles(scenario, sig)
    with _stage("cluster"):
        plan = decide_clusters(scenario, cluster_mode, sig)
        balance = balance_report(plan, scenario, cluster_mode, sig)
        balance_sig = balance_report(plan, scenario, SEMANTIC, sig)
    with _stage("transcode"):
        assignments = transcode_all(
            scenario, plan, sig, foreground, transcode_mode, ga, seed, exact, objective_unit
        )
        pairs = delivery_pairs(scenario, sig, assignments)
        bucket_means = avg_level_buckets([(w, lv) for _, _, lv, w in pairs], bucket_count)
        per_bs_buckets = {
            bs: avg_level_buckets(
                [(w, lv) for b, _, lv, w in pairs if b == bs], bucket_count
            )
            for bs in scenario.topology.bs_ids()
        }
    with _stage("schedule"):
        sched = schedule(plan, assignments, scenario, sig)
        progress = user_progress(sched, plan, scenario, sig)
    with _stage("qoe"):
        qoe = qoe_report(sched, progress, sig.global_map, scenario.ladder, gamma)
    image = None
    if source_image is not None:
        with _stage("image"):
            image = image_metrics(scenario, sig, assignments, source_image)
    return PipelineResult(
        scenario=scenario,
        sig=sig,
        foreground=foreground,
        plan=plan,
        balance=balance,
        balance_significance=balance_sig,
        assignments=assignments,
        sched=sched,
        progress=progress,
        qoe=qoe,
        bucket_means=bucket_means,
        per_bs_buckets=per_bs_buckets,
        image=image,
        elapsed_s=time.perf_counter() - t0,
    )


def _resolve_image(config: RunConfig, scenario: Scenario) -> Optional[np.ndarray]:
    if not config.include_image:
        return None
    if config.image_path is not None:
        return load_png(config.image_path)
    # Fixed-seed synthetic frame: stable across runs and configs.
    return synthetic_frame(scenario.grid.frame_width, scenario.grid.frame_height, seed=7)


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Execute one configured run and write the artifact set to out_dir."""
    scenario = load_scenario(config.scenario_path)
    source = _resolve_image(config, scenario)
    result = evaluate(
        scenario,
        config.cluster_mode,
        config.transcode_mode,
        seed=config.seed,
        gamma=config.gamma,
        ga=config.ga,
        exact=config.exact,
        objective_unit=config.objective_unit,
        bucket_count=config.bucket_count,
        source_image=source,
    )
    out = artifacts.ensure_dir(config.out_dir)
    write_run_artifacts(out, config, result)
    return result


def write_run_artifacts(out: Path, config: RunConfig, result: PipelineResult) -> None:
    scenario = result.scenario
    artifacts.write_significance_csv(out / "sig_global.csv", result.sig.global_map)
    for bs_id in scenario.topology.bs_ids():
        artifacts.write_significance_csv(out / f"sig_{bs_id}.csv", result.sig.per_bs[bs_id])
        if config.heatmaps:
            artifacts.write_heatmap_png(
                out / f"sig_{bs_id}.png",
                result.sig.per_bs[bs_id],
                scenario.grid.rows,
                scenario.grid.cols,
            )
    artifacts.write_plan_csv(out / "plan.csv", result.plan)
    artifacts.write_balance_json(out / "balance.json", result.balance)
    artifacts.write_balance_json(out / "balance_significance.json", result.balance_significance)
    artifacts.write_levels_csv(out / "levels.csv", result.assignments)
    buckets = dict(result.per_bs_buckets)
    buckets["all"] = result.bucket_means
    artifacts.write_buckets_csv(out / "buckets.csv", buckets)
    artifacts.write_slots_csv(out / "slots.csv", result.sched)
    artifacts.write_progress_json(out / "progress.json", result.progress)
    artifacts.write_qoe_json(out / "qoe.json", result.qoe)
    if result.image is not None:
        from .imaging import save_png

        save_png(result.image.source, out / "source.png")
        save_png(result.image.mosaic, out / "mosaic.png")
        _write_delivery_psnr_csv(out / "tile_psnr.csv", result)
    artifacts.write_manifest(out / "manifest.json", config.seed, config.to_json_dict())


def _write_delivery_psnr_csv(path, result: PipelineResult) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bs", "tile_row", "tile_col", "level", "psnr_db"])
        for (bs, tile, level), value in sorted(result.image.per_delivery_psnr.items()):
            w.writerow([bs, tile.row, tile.col, level, repr(value)])


@dataclass
class CompareRow:
    cluster_mode: str
    transcode_mode: str
    weighted_resolution: float
    smoothness_min: float
    smoothness_mean: float
    synchronization_s: float
    balance_dispersion: float
    significance_dispersion: float
    top_bucket_mean_level: Optional[float]
    bucket_means: list[Optional[float]]
    psnr_db: Optional[float]
    weighted_psnr_db: Optional[float]


def compare(
    scenario: Scenario,
    seed: int = 0,
    gamma: float = DEFAULT_LATE_PENALTY,
    ga: Optional[GaParams] = None,
    exact: bool = False,
    objective_unit: str = "index",
    bucket_count: int = 5,
    source_image: Optional[np.ndarray] = None,
) -> list[CompareRow]:
    """Run all four cluster/transcode mode pairs on one scenario and seed."""
    rows = []
    for cluster_mode, transcode_mode in MODE_PAIRS:
        r = evaluate(
            scenario,
            cluster_mode,
            transcode_mode,
            seed=seed,
            gamma=gamma,
            ga=ga,
            exact=exact,
            objective_unit=objective_unit,
            bucket_count=bucket_count,
            source_image=source_image,
        )
        rows.append(
            CompareRow(
                cluster_mode=cluster_mode,
                transcode_mode=transcode_mode,
                weighted_resolution=r.qoe.weighted_resolution,
                smoothness_min=r.qoe.smoothness_min,
                smoothness_mean=r.qoe.smoothness_mean,
                synchronization_s=r.qoe.synchronization_s,
                balance_dispersion=r.balance.dispersion,
                significance_dispersion=r.balance_significance.dispersion,
                top_bucket_mean_level=top_bucket_mean(r.bucket_means),
                bucket_means=r.bucket_means,
                psnr_db=r.image.psnr_db if r.image else None,
                weighted_psnr_db=r.image.weighted_psnr_db if r.image else None,
            )
        )
    return rows


def write_compare_csv(path, rows: list[CompareRow], bucket_count: int = 5) -> None:
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        header = [
            "cluster_mode",
            "transcode_mode",
            "weighted_resolution",
            "smoothness_min",
            "smoothness_mean",
            "synchronization_s",
            "balance_dispersion",
            "significance_dispersion",
            "top_bucket_mean_level",
        ]
        header += [f"bucket{i}_mean_level" for i in range(bucket_count)]
        header += ["psnr_db", "weighted_psnr_db"]
        w.writerow(header)
        for r in rows:
            row = [
                r.cluster_mode,
                r.transcode_mode,
                repr(r.weighted_resolution),
                repr(r.smoothness_min),
                repr(r.smoothness_mean),
                repr(r.synchronization_s),
                repr(r.balance_dispersion),
                repr(r.significance_dispersion),
                "" if r.top_bucket_mean_level is None else repr(r.top_bucket_mean_level),
            ]
            row += ["" if m is None else repr(m) for m in r.bucket_means]
            row += [
                "" if r.psnr_db is None else repr(r.psnr_db),
                "" if r.weighted_psnr_db is None else repr(r.weighted_psnr_db),
            ]
            w.writerow(row)
