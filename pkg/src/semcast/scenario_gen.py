"""Seeded random scenario generator for experiments and property tests.

Instances always satisfy the schema invariants, are feasible at the lowest
ladder level on every BS even if one BS ends up carrying every requested
tile, and can be constrained to a maximum number of free cluster decisions
(for comparison against exhaustive enumeration).
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .clustering import forced_mbs_tiles, relevant_sbs
from .hetnet import (
    BaseStation,
    DeliveryBudget,
    HetNetTopology,
    MBS_ID,
    ResolutionLadder,
)
from .scene import FeatureDistribution, FoVRequest, Scenario, TileGrid, tiles_of_viewport


def _random_fov(rng: np.random.Generator, grid: TileGrid, user: str,
                max_span: int) -> FoVRequest:
    span_r = int(rng.integers(1, min(max_span, grid.rows) + 1))
    span_c = int(rng.integers(1, min(max_span, grid.cols) + 1))
    r1 = int(rng.integers(0, grid.rows - span_r + 1))
    c1 = int(rng.integers(0, grid.cols - span_c + 1))
    rect = (r1, c1, r1 + span_r - 1, c1 + span_c - 1)
    return FoVRequest(user=user, tiles=tiles_of_viewport(grid, *rect), rect=rect)


def random_scenario(
    seed: int,
    rows: int = 4,
    cols: int = 4,
    n_features: int = 3,
    n_users: int = 4,
    n_sbs: int = 2,
    max_fov_span: int = 3,
    mbs_only_user: bool = True,
    max_free_tiles: Optional[int] = None,
    uniform_weight: Optional[float] = None,
    attempts: int = 200,
) -> Scenario:
    """Build a valid random scenario; retries until free-tile bound is met."""
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        sc = _draw(rng, rows, cols, n_features, n_users, n_sbs, max_fov_span,
                   mbs_only_user, uniform_weight)
        if max_free_tiles is None:
            return sc
        forced = forced_mbs_tiles(sc)
        free = [
            t for t in sc.requested_tiles() - forced if relevant_sbs(sc, t)
        ]
        if len(free) <= max_free_tiles:
            return sc
    raise RuntimeError(f"no scenario within {max_free_tiles} free tiles after {attempts} draws")


def _draw(rng, rows, cols, n_features, n_users, n_sbs, max_fov_span,
          mbs_only_user, uniform_weight) -> Scenario:
    tile = int(rng.integers(24, 49))
    grid = TileGrid(
        frame_width=cols * tile + int(rng.integers(0, tile)),
        frame_height=rows * tile + int(rng.integers(0, tile)),
        rows=rows,
        cols=cols,
    )
    if uniform_weight is not None:
        fractions = np.full((rows, cols, n_features), 0.0)
        fractions[:, :, 0] = uniform_weight
        uoa_vec = tuple([1.0] + [0.0] * (n_features - 1))
    else:
        raw = rng.uniform(0.0, 1.0, size=(rows, cols, n_features))
        fractions = raw / np.maximum(raw.sum(axis=2, keepdims=True), 1.0)
        uoa_vec = None
    features = FeatureDistribution(fractions)

    users = [f"u{i}" for i in range(1, n_users + 1)]
    uoa = {}
    for u in users:
        if uoa_vec is not None:
            uoa[u] = uoa_vec
        else:
            uoa[u] = tuple(float(x) for x in rng.uniform(0.05, 1.0, size=n_features))
    fovs = tuple(_random_fov(rng, grid, u, max_fov_span) for u in users)

    # Coverage: optionally keep the last user MBS-only, spread the rest over SBSs.
    assignable = users[:-1] if (mbs_only_user and n_users > 1) else users
    sbs_cover: list[set[str]] = [set() for _ in range(n_sbs)]
    for u in assignable:
        sbs_cover[int(rng.integers(0, n_sbs))].add(u)
    sbs_list = tuple(
        BaseStation(
            id=f"sbs{i + 1}",
            bandwidth_bps=float(rng.uniform(40.0, 160.0)) * 1e6,
            covers=frozenset(cov),
        )
        for i, cov in enumerate(sbs_cover)
    )
    topology = HetNetTopology(
        mbs=BaseStation(
            id=MBS_ID,
            bandwidth_bps=float(rng.uniform(120.0, 260.0)) * 1e6,
            covers=frozenset(users),
        ),
        sbs_list=sbs_list,
    )

    ladder = ResolutionLadder.default()
    deadline_ms = float(rng.uniform(40.0, 120.0))
    slot_ms = float(rng.uniform(4.0, 12.0))
    deadline_ms = max(deadline_ms, slot_ms)
    # Feasible by construction: every BS can carry all requested tiles at level 1.
    requested = set()
    for f in fovs:
        requested |= f.tiles
    min_bw = min([topology.mbs.bandwidth_bps] + [s.bandwidth_bps for s in sbs_list])
    floor_budget = min_bw * deadline_ms / 1000.0
    s1 = ladder.levels[0].scale
    base_bits = floor_budget / (len(requested) * s1**2) * float(rng.uniform(0.1, 0.8))
    budget = DeliveryBudget(
        deadline_s=deadline_ms / 1000.0, slot_s=slot_ms / 1000.0, base_tile_bits=base_bits
    )
    return Scenario(
        grid=grid,
        features=features,
        uoa=uoa,
        fov_requests=fovs,
        topology=topology,
        ladder=ladder,
        budget=budget,
        foreground_threshold=0.0,
    )
