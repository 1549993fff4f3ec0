"""Heterogeneous network model: one macro BS, disjoint small BSs, bit budgets.

The macro BS (id ``mbs``) covers every user; each small BS covers a disjoint
subset.  Spectrum is split between the macro and small tiers, so no
interference model is needed.  Transmitting a tile at a ladder level costs
``base_tile_bits * scale**2`` bits (raster content scales with pixel count).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

from .errors import ScenarioError

MBS_ID = "mbs"


@dataclass(frozen=True)
class BaseStation:
    id: str
    bandwidth_bps: float
    covers: frozenset[str]

    def __post_init__(self):
        if self.bandwidth_bps <= 0:
            raise ScenarioError(f"topology invariant violated: BS {self.id} bandwidth must be > 0")


@dataclass(frozen=True)
class HetNetTopology:
    mbs: BaseStation
    sbs_list: tuple[BaseStation, ...]

    def __post_init__(self):
        if self.mbs.id != MBS_ID:
            raise ScenarioError(f"topology invariant violated: macro BS id must be '{MBS_ID}'")
        ids = [s.id for s in self.sbs_list]
        if len(set(ids)) != len(ids) or MBS_ID in ids:
            raise ScenarioError("topology invariant violated: duplicate or reserved BS id")
        seen: set[str] = set()
        union: set[str] = set()
        for s in self.sbs_list:
            if seen & s.covers:
                raise ScenarioError(
                    f"topology invariant violated: SBS coverage sets overlap at {s.id}"
                )
            seen |= s.covers
            union |= s.covers
        if not union <= self.mbs.covers:
            raise ScenarioError(
                "topology invariant violated: MBS coverage must include every SBS-covered user"
            )

    def bs_ids(self) -> tuple[str, ...]:
        """Macro BS first, then small BSs sorted by id (canonical order)."""
        return (MBS_ID,) + tuple(sorted(s.id for s in self.sbs_list))

    def bs(self, bs_id: str) -> BaseStation:
        if bs_id == MBS_ID:
            return self.mbs
        for s in self.sbs_list:
            if s.id == bs_id:
                return s
        raise ScenarioError(f"unknown base station: {bs_id}")

    def covered_users(self, bs_id: str) -> frozenset[str]:
        return self.bs(bs_id).covers

    def sbs_of_user(self, user: str) -> Optional[str]:
        for s in self.sbs_list:
            if user in s.covers:
                return s.id
        return None

    def all_covered_users(self) -> frozenset[str]:
        out = set(self.mbs.covers)
        for s in self.sbs_list:
            out |= s.covers
        return frozenset(out)


class LadderLevel(NamedTuple):
    name: str
    scale: float


@dataclass(frozen=True)
class ResolutionLadder:
    """Ordered transcoding levels; index 1 is the coarsest, the top level is 1.0."""

    levels: tuple[LadderLevel, ...]

    def __post_init__(self):
        if not self.levels:
            raise ScenarioError("ladder invariant violated: at least one level required")
        scales = [lv.scale for lv in self.levels]
        if any(s <= 0.0 or s > 1.0 for s in scales):
            raise ScenarioError("ladder invariant violated: scales must lie in (0, 1]")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ScenarioError("ladder invariant violated: scales must strictly increase")
        if scales[-1] != 1.0:
            raise ScenarioError("ladder invariant violated: top level scale must be 1.0")

    @classmethod
    def from_dicts(cls, entries: Sequence[dict]) -> "ResolutionLadder":
        return cls(tuple(LadderLevel(str(e["name"]), float(e["scale"])) for e in entries))

    @classmethod
    def default(cls) -> "ResolutionLadder":
        return cls(
            (
                LadderLevel("l1", 0.15),
                LadderLevel("l2", 0.25),
                LadderLevel("l3", 0.50),
                LadderLevel("l4", 0.75),
                LadderLevel("l5", 1.00),
            )
        )

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def scale(self, level: int) -> float:
        """Scale fraction of a 1-based level index."""
        if not 1 <= level <= len(self.levels):
            raise ScenarioError(f"level {level} outside ladder 1..{len(self.levels)}")
        return self.levels[level - 1].scale

    def name(self, level: int) -> str:
        if not 1 <= level <= len(self.levels):
            raise ScenarioError(f"level {level} outside ladder 1..{len(self.levels)}")
        return self.levels[level - 1].name


@dataclass(frozen=True)
class DeliveryBudget:
    deadline_s: float
    slot_s: float
    base_tile_bits: float

    def __post_init__(self):
        if not self.slot_s > 0:
            raise ScenarioError("budget invariant violated: slot duration must be > 0")
        if self.deadline_s < self.slot_s:
            raise ScenarioError("budget invariant violated: deadline must be >= slot duration")
        if not self.base_tile_bits > 0:
            raise ScenarioError("budget invariant violated: base_tile_bits must be > 0")


def tile_cost(level: int, ladder: ResolutionLadder, budget: DeliveryBudget) -> float:
    """Bits to send one tile at a ladder level; quadratic in the scale fraction."""
    return budget.base_tile_bits * ladder.scale(level) ** 2


class BsBudget(NamedTuple):
    total_bits: float
    slot_bits: float


def bs_budget_bits(bs_id: str, topology: HetNetTopology, budget: DeliveryBudget) -> BsBudget:
    """Total bits before the deadline and bits per slot for one BS."""
    bw = topology.bs(bs_id).bandwidth_bps
    return BsBudget(total_bits=bw * budget.deadline_s, slot_bits=bw * budget.slot_s)


def parse_topology(doc: dict) -> HetNetTopology:
    try:
        m = doc["mbs"]
        mbs = BaseStation(
            id=MBS_ID,
            bandwidth_bps=float(m["bandwidth_mbps"]) * 1e6,
            covers=frozenset(str(u) for u in m["covers"]),
        )
        sbs = tuple(
            BaseStation(
                id=str(s["id"]),
                bandwidth_bps=float(s["bandwidth_mbps"]) * 1e6,
                covers=frozenset(str(u) for u in s["covers"]),
            )
            for s in doc.get("sbs", [])
        )
    except KeyError as exc:
        raise ScenarioError(f"topology schema missing key {exc}") from exc
    return HetNetTopology(mbs=mbs, sbs_list=sbs)


def topology_to_dict(topo: HetNetTopology) -> dict:
    return {
        "mbs": {
            "bandwidth_mbps": topo.mbs.bandwidth_bps / 1e6,
            "covers": sorted(topo.mbs.covers),
        },
        "sbs": [
            {
                "id": s.id,
                "bandwidth_mbps": s.bandwidth_bps / 1e6,
                "covers": sorted(s.covers),
            }
            for s in topo.sbs_list
        ],
    }
