"""Tile significance: per-user maps, FoV overlap, multi-user fusion, fg/bg split.

A user's weight for a tile is the dot product of their attention vector with
the tile's feature fractions.  The multi-user map averages the weights of the
tile's requesters and multiplies by the requester count, so popular tiles gain
significance without double-counting popularity.

All arithmetic here is plain Python float math in a fixed order (users in
scenario order, feature classes in index order), so downstream optimizers and
independent re-computations agree bit-for-bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import DimensionMismatchError, ScenarioError
from .hetnet import MBS_ID
from .scene import FeatureDistribution, FoVRequest, Scenario, TileId

SignificanceMap = dict[TileId, float]
OverlapMap = dict[TileId, int]


@dataclass(frozen=True)
class UOAProfile:
    """Per-user attention weight for each semantic feature class, each in [0, 1]."""

    user: str
    weights: tuple[float, ...]

    def __post_init__(self):
        if any(w < 0.0 or w > 1.0 for w in self.weights):
            raise ScenarioError(f"UOA invariant violated: entries of user {self.user} not in [0, 1]")


@dataclass(frozen=True)
class TileClassification:
    foreground: frozenset[TileId]
    background: frozenset[TileId]


def per_user_significance(
    uoa: UOAProfile, features: FeatureDistribution, fov: FoVRequest
) -> SignificanceMap:
    """Weight each requested tile by the attention-feature dot product."""
    if len(uoa.weights) != features.n_features:
        raise DimensionMismatchError(
            f"UOA length {len(uoa.weights)} != {features.n_features} feature classes"
        )
    out: SignificanceMap = {}
    for tile in sorted(fov.tiles):
        frac = features.fractions[tile.row, tile.col]
        w = 0.0
        for k in range(features.n_features):
            w += uoa.weights[k] * float(frac[k])
        out[tile] = w
    return out


def overlap_degree(requests: Sequence[FoVRequest]) -> OverlapMap:
    """Requester count for every tile in the union of the FoVs."""
    if not requests:
        raise ScenarioError("overlap_degree requires at least one FoV request")
    counts: OverlapMap = {}
    for req in requests:
        for tile in req.tiles:
            counts[tile] = counts.get(tile, 0) + 1
    return counts


def multi_user_significance(
    user_maps: Sequence[SignificanceMap], overlap: OverlapMap
) -> SignificanceMap:
    """Mean of the requesters' weights per tile, times the overlap count."""
    sums: dict[TileId, float] = {}
    requesters: dict[TileId, int] = {}
    for m in user_maps:
        for tile in sorted(m):
            sums[tile] = sums.get(tile, 0.0) + m[tile]
            requesters[tile] = requesters.get(tile, 0) + 1
    out: SignificanceMap = {}
    for tile in sorted(sums):
        if tile not in overlap:
            raise ScenarioError(f"overlap map missing tile {tuple(tile)}")
        mean = sums[tile] / requesters[tile]
        out[tile] = mean * overlap[tile]
    return out


def _user_map(scenario: Scenario, user: str) -> SignificanceMap:
    profile = UOAProfile(user=user, weights=tuple(scenario.uoa[user]))
    return per_user_significance(profile, scenario.features, scenario.fov_of(user))


def per_bs_significance(scenario: Scenario, bs_id: str) -> SignificanceMap:
    """Multi-user map restricted to the users a BS covers, overlap recounted there."""
    covered = scenario.topology.covered_users(bs_id)  # raises on unknown BS
    requests = [req for req in scenario.fov_requests if req.user in covered]
    if not requests:
        return {}
    maps = [_user_map(scenario, req.user) for req in requests]
    return multi_user_significance(maps, overlap_degree(requests))


@dataclass(frozen=True)
class SignificanceSet:
    """Global multi-user map plus one restricted map per BS."""

    global_map: SignificanceMap
    per_bs: dict[str, SignificanceMap]
    overlap: OverlapMap

    def for_bs(self, bs_id: str) -> SignificanceMap:
        return self.per_bs[bs_id]


def compute_significance_set(scenario: Scenario) -> SignificanceSet:
    requests = list(scenario.fov_requests)
    maps = [_user_map(scenario, req.user) for req in requests]
    overlap = overlap_degree(requests)
    global_map = multi_user_significance(maps, overlap)
    per_bs = {bs: per_bs_significance(scenario, bs) for bs in scenario.topology.bs_ids()}
    return SignificanceSet(global_map=global_map, per_bs=per_bs, overlap=overlap)


def classify_tiles(sig_map: Mapping[TileId, float], threshold: float) -> TileClassification:
    """Split tiles into foreground (weight > threshold) and droppable background."""
    if threshold < 0:
        raise ScenarioError("classification threshold must be >= 0")
    fg = frozenset(t for t, w in sig_map.items() if w > threshold)
    bg = frozenset(sig_map) - fg
    return TileClassification(foreground=fg, background=bg)
