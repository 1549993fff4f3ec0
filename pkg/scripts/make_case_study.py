"""Regenerate the bundled case-study scenario JSON.

Topology: one 200 Mbps macro BS covering all five users, a 150 Mbps small BS
covering u1/u2, a 100 Mbps small BS covering u4/u5, and u3 reachable only via
the macro BS.  Grid and delivery parameters are configuration choices; the
feature field is drawn once from a fixed seed so the file is reproducible.
"""
import argparse
from pathlib import Path

import numpy as np

from semcast.hetnet import BaseStation, DeliveryBudget, HetNetTopology, MBS_ID, ResolutionLadder
from semcast.scene import (
    FeatureDistribution,
    FoVRequest,
    Scenario,
    TileGrid,
    dump_scenario,
    tiles_of_viewport,
)

ROWS = COLS = 8
FRAME = 512
N_FEATURES = 3

FOVS = {
    "u1": (0, 0, 3, 3),
    "u2": (0, 2, 3, 5),
    "u3": (2, 2, 5, 5),
    "u4": (4, 2, 7, 5),
    "u5": (4, 4, 7, 7),
}

UOA = {
    "u1": (0.90, 0.30, 0.10),
    "u2": (0.20, 0.80, 0.40),
    "u3": (0.50, 0.50, 0.50),
    "u4": (0.10, 0.40, 0.90),
    "u5": (0.70, 0.20, 0.60),
}


def build_features(seed: int = 11) -> FeatureDistribution:
    rng = np.random.default_rng(seed)
    raw = rng.uniform(0.0, 1.0, size=(ROWS, COLS, N_FEATURES))
    # Structured hot spots: a person-like blob, a structure band, a signage strip.
    raw[1:4, 1:4, 0] += 1.5
    raw[3:6, 3:6, 1] += 1.8
    raw[5:8, 4:7, 2] += 1.5
    fractions = raw / raw.sum(axis=2, keepdims=True) * rng.uniform(
        0.35, 0.95, size=(ROWS, COLS, 1)
    )
    # A few featureless tiles inside the requested region exercise the
    # background-drop path (zero weight for every user).
    for r, c in [(0, 5), (7, 2), (3, 0)]:
        fractions[r, c, :] = 0.0
    return FeatureDistribution(np.round(fractions, 6))


def build_scenario() -> Scenario:
    grid = TileGrid(frame_width=FRAME, frame_height=FRAME, rows=ROWS, cols=COLS)
    fovs = tuple(
        FoVRequest(user=u, tiles=tiles_of_viewport(grid, *rect), rect=rect)
        for u, rect in FOVS.items()
    )
    topology = HetNetTopology(
        mbs=BaseStation(id=MBS_ID, bandwidth_bps=200e6,
                        covers=frozenset(["u1", "u2", "u3", "u4", "u5"])),
        sbs_list=(
            BaseStation(id="sbs1", bandwidth_bps=150e6, covers=frozenset(["u1", "u2"])),
            BaseStation(id="sbs2", bandwidth_bps=100e6, covers=frozenset(["u4", "u5"])),
        ),
    )
    return Scenario(
        grid=grid,
        features=build_features(),
        uoa=dict(UOA),
        fov_requests=fovs,
        topology=topology,
        ladder=ResolutionLadder.default(),
        budget=DeliveryBudget(deadline_s=0.1, slot_s=0.01, base_tile_bits=2e6),
        foreground_threshold=0.0,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    default = Path(__file__).resolve().parents[1] / "src" / "semcast" / "data" / "case_study.json"
    parser.add_argument("--out", default=str(default))
    args = parser.parse_args()
    dump_scenario(build_scenario(), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
