"""Slot scheduling of multicast clusters with progress balancing.

Each BS packs its clusters into fixed-length slots, highest significance
first, under the per-slot bit capacity.  Before every slot the per-user
delivery fractions are frozen and clusters whose requesters lag furthest
behind are preferred, which keeps playback progress aligned across users.
Clusters that finish after the deadline stay in the schedule but are marked
late.  Background tiles never enter the schedule; they are dropped before
packing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .clustering import ClusterPlan
from .errors import ScenarioError
from .hetnet import MBS_ID, bs_budget_bits, tile_cost
from .scene import Scenario, TileId
from .significance import SignificanceSet, classify_tiles, compute_significance_set
from .transcode import LevelAssignment


@dataclass(frozen=True)
class ScheduledCluster:
    bs: str
    tile: TileId
    level: int
    bits: float
    start_slot: int
    end_slot: int  # inclusive; > start_slot only when a cluster spans slots
    completion_s: float
    late: bool


@dataclass(frozen=True)
class Schedule:
    clusters: tuple[ScheduledCluster, ...]
    slot_s: float
    deadline_s: float
    slot_caps: dict[str, float]  # bs id -> bits per slot

    def by_bs(self, bs_id: str) -> list[ScheduledCluster]:
        return [c for c in self.clusters if c.bs == bs_id]

    def slot_loads(self) -> dict[str, dict[int, float]]:
        """Bits consumed per (bs, slot), spreading spanning clusters."""
        loads: dict[str, dict[int, float]] = {}
        for c in self.clusters:
            per_bs = loads.setdefault(c.bs, {})
            remaining = c.bits
            for slot in range(c.start_slot, c.end_slot + 1):
                cap = self.slot_caps[c.bs]
                chunk = min(remaining, cap) if c.end_slot > c.start_slot else remaining
                per_bs[slot] = per_bs.get(slot, 0.0) + chunk
                remaining -= chunk
        return loads


def _requesters(scenario: Scenario, bs_id: str, tile: TileId) -> list[str]:
    """Users the cluster serves: requesters of the tile covered by the BS."""
    covered = scenario.topology.covered_users(bs_id)
    return [req.user for req in scenario.fov_requests if req.user in covered and tile in req.tiles]


def foreground_tiles(scenario: Scenario, sig: SignificanceSet) -> frozenset[TileId]:
    return classify_tiles(sig.global_map, scenario.foreground_threshold).foreground


def schedule(
    plan: ClusterPlan,
    level_assignments: Mapping[str, LevelAssignment],
    scenario: Scenario,
    sig: Optional[SignificanceSet] = None,
) -> Schedule:
    """Greedy slot packing, significance first, balanced by user progress."""
    if sig is None:
        sig = compute_significance_set(scenario)
    fg = foreground_tiles(scenario, sig)
    budget = scenario.budget
    slot_s = budget.slot_s
    deadline_s = budget.deadline_s

    requested_fg: dict[str, int] = {}
    for req in scenario.fov_requests:
        requested_fg[req.user] = len(req.tiles & fg)

    # Pending clusters per BS with static priority key pieces.
    pending: dict[str, list[tuple[TileId, int, float, float, int, list[str]]]] = {}
    for bs_id in scenario.topology.bs_ids():
        rows = []
        assignment = level_assignments.get(bs_id, {})
        sig_map = sig.per_bs[bs_id]
        for tile in plan.tiles_of_bs(bs_id):
            if tile not in fg:
                continue  # background tiles are dropped, not transmitted
            if tile not in assignment:
                raise ScenarioError(
                    f"schedule input missing level for tile {tuple(tile)} at {bs_id}"
                )
            level = assignment[tile]
            bits = tile_cost(level, scenario.ladder, budget)
            rows.append(
                (tile, level, bits, sig_map[tile], sig.overlap[tile], _requesters(scenario, bs_id, tile))
            )
        pending[bs_id] = rows

    slot_caps = {
        bs_id: bs_budget_bits(bs_id, scenario.topology, budget).slot_bits
        for bs_id in scenario.topology.bs_ids()
    }

    done: list[ScheduledCluster] = []
    delivered: dict[str, int] = {u: 0 for u in requested_fg}  # on-time tiles so far
    blocked_until: dict[str, int] = {bs: 0 for bs in pending}  # spanning clusters
    slot = 0
    guard = 0
    while any(pending.values()):
        guard += 1
        if guard > 1_000_000:
            raise ScenarioError("scheduler failed to converge")  # defensive; unreachable
        fractions = {
            u: (delivered[u] / requested_fg[u]) if requested_fg[u] else 1.0
            for u in requested_fg
        }
        newly_done: list[ScheduledCluster] = []
        for bs_id in scenario.topology.bs_ids():
            rows = pending[bs_id]
            if not rows or blocked_until[bs_id] > slot:
                continue
            cap = slot_caps[bs_id]
            ranked = sorted(
                rows,
                key=lambda r: (
                    min(fractions[u] for u in r[5]) if r[5] else 1.0,
                    -r[3],
                    -r[4],
                    r[0],
                ),
            )
            remaining = cap
            taken: list[tuple] = []
            for row in ranked:
                tile, level, bits, _, _, _ = row
                if bits <= cap:
                    if bits <= remaining:
                        taken.append(row)
                        remaining -= bits
                elif remaining == cap and not taken:
                    # Oversized cluster: give it exclusive consecutive slots.
                    span = -(-bits // cap)  # ceil
                    end = slot + int(span) - 1
                    completion = (end + 1) * slot_s
                    newly_done.append(
                        ScheduledCluster(
                            bs=bs_id,
                            tile=tile,
                            level=level,
                            bits=bits,
                            start_slot=slot,
                            end_slot=end,
                            completion_s=completion,
                            late=completion > deadline_s + 1e-12,
                        )
                    )
                    blocked_until[bs_id] = end + 1
                    rows.remove(row)
                    taken = []
                    remaining = 0.0
                    break
            for row in taken:
                tile, level, bits, _, _, _ = row
                completion = (slot + 1) * slot_s
                newly_done.append(
                    ScheduledCluster(
                        bs=bs_id,
                        tile=tile,
                        level=level,
                        bits=bits,
                        start_slot=slot,
                        end_slot=slot,
                        completion_s=completion,
                        late=completion > deadline_s + 1e-12,
                    )
                )
                rows.remove(row)
        for c in newly_done:
            done.append(c)
            if not c.late:
                for u in _requesters(scenario, c.bs, c.tile):
                    delivered[u] += 1
        slot += 1

    return Schedule(
        clusters=tuple(done), slot_s=slot_s, deadline_s=deadline_s, slot_caps=slot_caps
    )


@dataclass(frozen=True)
class UserProgress:
    user: str
    completion_s: float
    on_time_fraction: float
    on_time: int
    requested: int


def user_progress(
    sched: Schedule,
    plan: ClusterPlan,
    scenario: Scenario,
    sig: Optional[SignificanceSet] = None,
) -> dict[str, UserProgress]:
    """Per-user completion time and on-time fraction over requested foreground tiles."""
    if sig is None:
        sig = compute_significance_set(scenario)
    fg = foreground_tiles(scenario, sig)
    by_key = {(c.bs, c.tile): c for c in sched.clusters}
    out: dict[str, UserProgress] = {}
    for req in scenario.fov_requests:
        user = req.user
        own_sbs = scenario.topology.sbs_of_user(user)
        wanted = sorted(req.tiles & fg)
        on_time = 0
        completion = None
        for tile in wanted:
            decision = plan.decisions.get(tile)
            if decision is None:
                continue
            bs_id = MBS_ID if decision.is_mbs else own_sbs
            cluster = by_key.get((bs_id, tile))
            if cluster is None or cluster.late:
                continue
            on_time += 1
            if completion is None or cluster.completion_s > completion:
                completion = cluster.completion_s
        frac = (on_time / len(wanted)) if wanted else 1.0
        out[user] = UserProgress(
            user=user,
            completion_s=completion if completion is not None else sched.deadline_s,
            on_time_fraction=frac,
            on_time=on_time,
            requested=len(wanted),
        )
    return out
