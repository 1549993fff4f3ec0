"""Multicast cluster decision: serve each tile from the MBS once or from each
relevant SBS separately, balancing per-BS load-to-bandwidth ratios.

A tile requested by a user outside all SBS coverage is forced onto the MBS.
Every other requested tile is a free decision between the MBS route and the
SBS route.  Load is the significance score of the assigned tiles in semantic
mode and the tile count in conventional mode; the solver minimizes the
coefficient of variation of per-BS load/bandwidth ratios.

Free-tile decisions are enumerated exhaustively up to ENUM_LIMIT tiles;
larger instances use a greedy descent plus single-tile flip local search.
Candidate dispersions are always evaluated by the same tile-lexicographic
accumulation that ``bs_loads`` uses, so an independent enumeration following
that order reproduces the reported dispersion exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import InfeasibleError, ScenarioError
from .hetnet import MBS_ID, bs_budget_bits, tile_cost
from .scene import Scenario, TileId
from .significance import SignificanceSet, compute_significance_set

SEMANTIC = "semantic"
CONVENTIONAL = "conventional"
MODES = (SEMANTIC, CONVENTIONAL)

ENUM_LIMIT = 16


@dataclass(frozen=True)
class TileDecision:
    """serving is MBS_ID or the frozenset of relevant SBS ids."""

    serving: Union[str, frozenset[str]]
    forced: bool = False

    @property
    def is_mbs(self) -> bool:
        return self.serving == MBS_ID


@dataclass(frozen=True)
class ClusterPlan:
    decisions: dict[TileId, TileDecision]

    def mbs_tiles(self) -> list[TileId]:
        return sorted(t for t, d in self.decisions.items() if d.is_mbs)

    def sbs_tiles(self, sbs_id: str) -> list[TileId]:
        return sorted(
            t for t, d in self.decisions.items() if not d.is_mbs and sbs_id in d.serving
        )

    def tiles_of_bs(self, bs_id: str) -> list[TileId]:
        return self.mbs_tiles() if bs_id == MBS_ID else self.sbs_tiles(bs_id)


@dataclass(frozen=True)
class BalanceReport:
    mode: str
    ratios: dict[str, float]  # bs id -> load / bandwidth
    dispersion: float  # coefficient of variation of the ratios


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ScenarioError(f"unknown mode {mode!r}; expected one of {MODES}")


def forced_mbs_tiles(scenario: Scenario) -> frozenset[TileId]:
    """Tiles requested by at least one user covered by no SBS."""
    forced: set[TileId] = set()
    for req in scenario.fov_requests:
        if scenario.topology.sbs_of_user(req.user) is None:
            forced |= req.tiles
    return frozenset(forced)


def relevant_sbs(scenario: Scenario, tile: TileId) -> frozenset[str]:
    """SBSs covering at least one user that requests the tile."""
    out: set[str] = set()
    for req in scenario.fov_requests:
        if tile in req.tiles:
            sbs = scenario.topology.sbs_of_user(req.user)
            if sbs is not None:
                out.add(sbs)
    return frozenset(out)


def _tile_load(mode: str, sig_map: Mapping[TileId, float], tile: TileId) -> float:
    return sig_map[tile] if mode == SEMANTIC else 1.0


def bs_loads(
    plan: ClusterPlan, scenario: Scenario, mode: str, sig: SignificanceSet
) -> dict[str, float]:
    """Per-BS load, accumulated in tile-lexicographic order (canonical)."""
    loads = {bs: 0.0 for bs in scenario.topology.bs_ids()}
    for tile in sorted(plan.decisions):
        d = plan.decisions[tile]
        if d.is_mbs:
            loads[MBS_ID] += _tile_load(mode, sig.global_map, tile)
        else:
            for s in sorted(d.serving):
                loads[s] += _tile_load(mode, sig.per_bs[s], tile)
    return loads


def dispersion_of_loads(loads: Mapping[str, float], scenario: Scenario) -> float:
    """Coefficient of variation of load/bandwidth over all BSs; 0 when unloaded."""
    order = scenario.topology.bs_ids()
    ratios = [loads[b] / scenario.topology.bs(b).bandwidth_bps for b in order]
    n = len(ratios)
    mean = sum(ratios) / n
    if mean == 0.0:
        return 0.0
    var = sum((r - mean) ** 2 for r in ratios) / n
    return math.sqrt(var) / mean


def balance_report(
    plan: ClusterPlan,
    scenario: Scenario,
    mode: str,
    sig: Optional[SignificanceSet] = None,
) -> BalanceReport:
    _check_mode(mode)
    if sig is None:
        sig = compute_significance_set(scenario)
    loads = bs_loads(plan, scenario, mode, sig)
    ratios = {
        b: loads[b] / scenario.topology.bs(b).bandwidth_bps
        for b in scenario.topology.bs_ids()
    }
    return BalanceReport(mode=mode, ratios=ratios, dispersion=dispersion_of_loads(loads, scenario))


def _check_forced_feasible(scenario: Scenario, forced: frozenset[TileId]) -> None:
    # Forced tiles must fit on the MBS even at the coarsest ladder level.
    min_cost = tile_cost(1, scenario.ladder, scenario.budget)
    need = len(forced) * min_cost
    total = bs_budget_bits(MBS_ID, scenario.topology, scenario.budget).total_bits
    if need > total:
        raise InfeasibleError(
            f"forced MBS load infeasible: {len(forced)} tiles need {need:.0f} bits at the "
            f"lowest level but the MBS budget is {total:.0f} bits "
            f"(deficit {need - total:.0f})"
        )


class _Instance:
    """Free-tile decision instance with canonical candidate evaluation.

    Tiles are walked in global lexicographic order; a free tile adds its MBS
    or per-SBS contribution according to the candidate choice vector.  This is
    the same accumulation order as ``bs_loads`` on the finished plan.
    """

    def __init__(self, scenario: Scenario, mode: str, sig: SignificanceSet,
                 forced: frozenset[TileId]):
        self.scenario = scenario
        requested = sorted(scenario.requested_tiles())
        rel = {t: relevant_sbs(scenario, t) for t in requested}
        self.free = [t for t in requested if t not in forced and rel[t]]
        free_pos = {t: i for i, t in enumerate(self.free)}
        # steps: (free index or -1, contributions-if-mbs, contributions-if-sbs)
        self.steps: list[tuple[int, list[tuple[str, float]], list[tuple[str, float]]]] = []
        for t in requested:
            mbs_contrib = [(MBS_ID, _tile_load(mode, sig.global_map, t))]
            sbs_contrib = [(s, _tile_load(mode, sig.per_bs[s], t)) for s in sorted(rel[t])]
            if t in free_pos:
                self.steps.append((free_pos[t], mbs_contrib, sbs_contrib))
            else:
                self.steps.append((-1, mbs_contrib, mbs_contrib))
        self.bs_ids = scenario.topology.bs_ids()
        self.relevant = rel

    def dispersion(self, choices: list[bool]) -> float:
        loads = {bs: 0.0 for bs in self.bs_ids}
        for idx, mbs_contrib, sbs_contrib in self.steps:
            contrib = mbs_contrib if (idx < 0 or choices[idx]) else sbs_contrib
            for bs, w in contrib:
                loads[bs] += w
        return dispersion_of_loads(loads, self.scenario)

    def dispersion_partial(self, choices: list[Optional[bool]]) -> float:
        """Dispersion with undecided free tiles contributing nothing."""
        loads = {bs: 0.0 for bs in self.bs_ids}
        for idx, mbs_contrib, sbs_contrib in self.steps:
            if idx >= 0 and choices[idx] is None:
                continue
            contrib = mbs_contrib if (idx < 0 or choices[idx]) else sbs_contrib
            for bs, w in contrib:
                loads[bs] += w
        return dispersion_of_loads(loads, self.scenario)

    def to_plan(self, choices: list[bool], forced: frozenset[TileId]) -> ClusterPlan:
        decisions: dict[TileId, TileDecision] = {}
        for t in self.scenario.requested_tiles():
            if t in forced:
                decisions[t] = TileDecision(serving=MBS_ID, forced=True)
        for i, t in enumerate(self.free):
            decisions[t] = (
                TileDecision(serving=MBS_ID)
                if choices[i]
                else TileDecision(serving=self.relevant[t])
            )
        for t in self.scenario.requested_tiles():
            if t not in decisions:  # no relevant SBS, not forced: MBS is the only route
                decisions[t] = TileDecision(serving=MBS_ID)
        return ClusterPlan(decisions=decisions)


def decide_clusters(
    scenario: Scenario, mode: str, sig: Optional[SignificanceSet] = None
) -> ClusterPlan:
    """Assign every requested tile to the MBS or its relevant SBSs.

    Minimizes the coefficient of variation of per-BS load/bandwidth ratios.
    Exact for up to ENUM_LIMIT free tiles, heuristic beyond.
    """
    _check_mode(mode)
    if sig is None:
        sig = compute_significance_set(scenario)
    forced = forced_mbs_tiles(scenario)
    _check_forced_feasible(scenario, forced)
    inst = _Instance(scenario, mode, sig, forced)
    n = len(inst.free)
    if n == 0:
        choices: list[bool] = []
    elif n <= ENUM_LIMIT:
        choices = _solve_enumerate(inst, n)
    else:
        choices = _solve_greedy(inst, n)
    return inst.to_plan(choices, forced)


def _solve_enumerate(inst: _Instance, n: int) -> list[bool]:
    """Try every MBS/SBS split; first minimum wins (tile order, SBS before MBS)."""
    best_cv = math.inf
    best: list[bool] = [False] * n
    for mask in range(1 << n):
        choices = [bool(mask >> i & 1) for i in range(n)]
        cv = inst.dispersion(choices)
        if cv < best_cv:
            best_cv = cv
            best = choices
    return best


def _solve_greedy(inst: _Instance, n: int) -> list[bool]:
    """Largest-load-first greedy placement, then single-tile flip descent."""
    weight = {}
    for idx, mbs_contrib, _ in inst.steps:
        if idx >= 0:
            weight[idx] = mbs_contrib[0][1]
    order = sorted(range(n), key=lambda i: (-weight[i], inst.free[i]))
    partial: list[Optional[bool]] = [None] * n
    for i in order:
        partial[i] = True
        cv_mbs = inst.dispersion_partial(partial)
        partial[i] = False
        cv_sbs = inst.dispersion_partial(partial)
        # Ties go to the MBS: one multicast beats per-SBS repeats.
        partial[i] = cv_mbs <= cv_sbs
    choices = [bool(c) for c in partial]
    best_cv = inst.dispersion(choices)
    for _ in range(100):  # flip passes until a full pass makes no improvement
        improved = False
        for i in range(n):
            choices[i] = not choices[i]
            cv = inst.dispersion(choices)
            if cv < best_cv:
                best_cv = cv
                improved = True
            else:
                choices[i] = not choices[i]
        if not improved:
            break
    return choices
