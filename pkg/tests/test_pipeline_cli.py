import dataclasses
import filecmp
import hashlib
import json
from pathlib import Path

import pytest

from semcast import case_study_path
from semcast.cli import main
from semcast.pipeline import MODE_PAIRS, RunConfig, compare, evaluate, run_pipeline
from semcast.scene import dump_scenario, load_scenario
from semcast.transcode import GaParams

FAST_GA = GaParams(population_size=12, generations=15)


def dir_digest(path: Path) -> dict[str, str]:
    out = {}
    for p in sorted(path.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(path))] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


def test_run_pipeline_byte_identical(tmp_path):
    digests = []
    for name in ("a", "b"):
        config = RunConfig(
            scenario_path=case_study_path(),
            cluster_mode="semantic",
            transcode_mode="semantic",
            seed=3,
            out_dir=str(tmp_path / name),
            ga=FAST_GA,
            heatmaps=True,
        )
        run_pipeline(config)
        digests.append(dir_digest(tmp_path / name))
    assert digests[0] == digests[1]
    assert "qoe.json" in digests[0] and "mosaic.png" in digests[0]


def test_manifest_records_seed_and_hash(tmp_path):
    config = RunConfig(
        scenario_path=case_study_path(), seed=11, out_dir=str(tmp_path / "m"),
        ga=FAST_GA, include_image=False,
    )
    run_pipeline(config)
    doc = json.loads((tmp_path / "m" / "manifest.json").read_text())
    assert doc["seed"] == 11
    assert len(doc["config_hash"]) == 64
    assert doc["config"]["cluster_mode"] == "semantic"


def test_stage_error_carries_stage_tag(case_study):
    from semcast.errors import InfeasibleError
    from semcast.hetnet import DeliveryBudget

    bad = dataclasses.replace(
        case_study, budget=DeliveryBudget(deadline_s=0.01, slot_s=0.01, base_tile_bits=1e9)
    )
    with pytest.raises(InfeasibleError, match=r"\[cluster\]"):
        evaluate(bad, "semantic", "semantic", ga=FAST_GA)


def test_cli_stage_composition(tmp_path, capsys):
    out = str(tmp_path / "stages")
    scenario = case_study_path()
    assert main(["significance", "--scenario", scenario, "--out-dir", out, "--heatmap"]) == 0
    assert main(["cluster", "--scenario", scenario, "--mode", "semantic", "--out-dir", out]) == 0
    assert (
        main(
            ["transcode", "--scenario", scenario, "--mode", "semantic",
             "--plan", f"{out}/plan.csv", "--out-dir", out,
             "--population", "12", "--generations", "15"]
        )
        == 0
    )
    assert (
        main(
            ["schedule", "--scenario", scenario, "--plan", f"{out}/plan.csv",
             "--levels", f"{out}/levels.csv", "--out-dir", out]
        )
        == 0
    )
    assert (
        main(
            ["qoe", "--scenario", scenario, "--plan", f"{out}/plan.csv",
             "--levels", f"{out}/levels.csv", "--out-dir", out]
        )
        == 0
    )
    for artifact in (
        "sig_global.csv", "sig_mbs.csv", "sig_sbs1.png", "plan.csv", "balance.json",
        "levels.csv", "buckets.csv", "slots.csv", "progress.json", "qoe.json",
    ):
        assert (tmp_path / "stages" / artifact).exists(), artifact
    doc = json.loads((tmp_path / "stages" / "qoe.json").read_text())
    assert 0.0 <= doc["weighted_resolution"] <= 1.0
    assert 0.0 <= doc["smoothness"]["aggregate_min"] <= 1.0
    assert doc["synchronization_s"] >= 0.0


def test_cli_stage_files_match_in_memory_run(tmp_path):
    # The staged path and the monolithic run agree on the final metrics.
    out = str(tmp_path / "staged")
    scenario_path = case_study_path()
    main(["cluster", "--scenario", scenario_path, "--mode", "semantic", "--out-dir", out])
    main(["transcode", "--scenario", scenario_path, "--mode", "semantic",
          "--plan", f"{out}/plan.csv", "--out-dir", out,
          "--population", "12", "--generations", "15", "--seed", "0"])
    main(["qoe", "--scenario", scenario_path, "--plan", f"{out}/plan.csv",
          "--levels", f"{out}/levels.csv", "--out-dir", out])
    staged = json.loads((Path(out) / "qoe.json").read_text())

    scenario = load_scenario(scenario_path)
    result = evaluate(scenario, "semantic", "semantic", seed=0, ga=FAST_GA)
    assert staged["weighted_resolution"] == pytest.approx(result.qoe.weighted_resolution)
    assert staged["smoothness"]["aggregate_min"] == pytest.approx(result.qoe.smoothness_min)


def test_cli_missing_scenario_reports_path(tmp_path, capsys):
    rc = main(["run", "--scenario", str(tmp_path / "absent.json"), "--out-dir", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "absent.json" in err


def test_cli_run_and_compare_smoke(tmp_path):
    out = str(tmp_path / "run")
    rc = main(
        ["run", "--scenario", case_study_path(), "--out-dir", out, "--no-image",
         "--population", "12", "--generations", "15", "--seed", "1"]
    )
    assert rc == 0
    assert (Path(out) / "manifest.json").exists()
    out2 = str(tmp_path / "cmp")
    rc = main(
        ["compare", "--scenario", case_study_path(), "--out-dir", out2, "--no-image",
         "--population", "12", "--generations", "15"]
    )
    assert rc == 0
    lines = (Path(out2) / "compare.csv").read_text().strip().splitlines()
    assert len(lines) == 1 + len(MODE_PAIRS)


def test_compare_rows_equal_on_uniform_scenario(tmp_path):
    from tests.test_clustering import coincidence_scenario

    sc = coincidence_scenario()
    rows = compare(sc, seed=0, ga=FAST_GA, source_image=None)
    metrics = {
        (
            round(r.weighted_resolution, 12),
            round(r.smoothness_min, 12),
            round(r.synchronization_s, 12),
            round(r.balance_dispersion, 12),
        )
        for r in rows
    }
    assert len(metrics) == 1  # all four mode pairs coincide


def test_compare_deterministic_rows(tmp_path):
    sc = load_scenario(case_study_path())
    a = compare(sc, seed=5, ga=FAST_GA, source_image=None)
    b = compare(sc, seed=5, ga=FAST_GA, source_image=None)
    assert [dataclasses.asdict(r) for r in a] == [dataclasses.asdict(r) for r in b]
