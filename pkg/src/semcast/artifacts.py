"""On-disk artifact formats: stage outputs as CSV/JSON, readable back for
partial pipelines.

All writers sort rows and format floats with repr, so identical inputs
produce byte-identical files.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Mapping, Optional

import numpy as np

from .clustering import BalanceReport, ClusterPlan, TileDecision
from .errors import ScenarioError
from .hetnet import MBS_ID
from .imaging import quantize, save_png
from .qoe import QoEReport
from .scene import TileId
from .scheduling import Schedule, UserProgress
from .significance import SignificanceMap
from .transcode import LevelAssignment


def write_significance_csv(path, sig_map: SignificanceMap) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tile_row", "tile_col", "weight"])
        for tile in sorted(sig_map):
            w.writerow([tile.row, tile.col, repr(sig_map[tile])])


def read_significance_csv(path) -> SignificanceMap:
    out: SignificanceMap = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out[TileId(int(row["tile_row"]), int(row["tile_col"]))] = float(row["weight"])
    return out


def write_heatmap_png(path, sig_map: SignificanceMap, rows: int, cols: int,
                      cell_px: int = 16) -> None:
    """Grayscale block heatmap of a significance map (white = most significant)."""
    img = np.zeros((rows * cell_px, cols * cell_px))
    peak = max(sig_map.values(), default=0.0)
    for tile, wgt in sig_map.items():
        level = 255.0 * wgt / peak if peak > 0 else 0.0
        img[
            tile.row * cell_px : (tile.row + 1) * cell_px,
            tile.col * cell_px : (tile.col + 1) * cell_px,
        ] = level
    save_png(quantize(img), path)


def _serving_str(decision: TileDecision) -> str:
    if decision.is_mbs:
        return MBS_ID
    return "+".join(sorted(decision.serving))


def write_plan_csv(path, plan: ClusterPlan) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["tile_row", "tile_col", "serving", "forced"])
        for tile in sorted(plan.decisions):
            d = plan.decisions[tile]
            w.writerow([tile.row, tile.col, _serving_str(d), int(d.forced)])


def read_plan_csv(path) -> ClusterPlan:
    decisions: dict[TileId, TileDecision] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            tile = TileId(int(row["tile_row"]), int(row["tile_col"]))
            serving = row["serving"]
            if serving == MBS_ID:
                decisions[tile] = TileDecision(serving=MBS_ID, forced=bool(int(row["forced"])))
            else:
                decisions[tile] = TileDecision(serving=frozenset(serving.split("+")))
    return ClusterPlan(decisions=decisions)


def write_balance_json(path, report: BalanceReport) -> None:
    doc = {
        "mode": report.mode,
        "ratios": {b: report.ratios[b] for b in sorted(report.ratios)},
        "dispersion": report.dispersion,
    }
    _write_json(path, doc)


def write_levels_csv(path, assignments: Mapping[str, LevelAssignment]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bs", "tile_row", "tile_col", "level"])
        for bs in sorted(assignments):
            for tile in sorted(assignments[bs]):
                w.writerow([bs, tile.row, tile.col, assignments[bs][tile]])


def read_levels_csv(path) -> dict[str, LevelAssignment]:
    out: dict[str, LevelAssignment] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.setdefault(row["bs"], {})[
                TileId(int(row["tile_row"]), int(row["tile_col"]))
            ] = int(row["level"])
    return out


def write_buckets_csv(path, buckets: Mapping[str, list[Optional[float]]]) -> None:
    """Per-BS average level per significance bucket (low index = low weight)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bs", "bucket", "mean_level"])
        for bs in sorted(buckets):
            for i, mean in enumerate(buckets[bs]):
                w.writerow([bs, i, "" if mean is None else repr(mean)])


def write_slots_csv(path, sched: Schedule) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bs", "slot", "tile_row", "tile_col", "bits", "late"])
        rows = sorted(sched.clusters, key=lambda c: (c.bs, c.start_slot, c.tile))
        for c in rows:
            w.writerow([c.bs, c.start_slot, c.tile.row, c.tile.col, repr(c.bits), int(c.late)])


def write_progress_json(path, progress: Mapping[str, UserProgress]) -> None:
    doc = {
        u: {
            "completion_s": p.completion_s,
            "on_time_fraction": p.on_time_fraction,
            "on_time": p.on_time,
            "requested": p.requested,
        }
        for u, p in sorted(progress.items())
    }
    _write_json(path, doc)


def write_qoe_json(path, report: QoEReport) -> None:
    _write_json(path, report.to_json_dict())


def write_manifest(path, seed: int, config: dict) -> None:
    import hashlib

    blob = json.dumps(config, sort_keys=True).encode("utf-8")
    _write_json(
        path,
        {"seed": seed, "config_hash": hashlib.sha256(blob).hexdigest(), "config": config},
    )


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
