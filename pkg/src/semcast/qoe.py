"""Three-axis experience metrics: weighted resolution, smoothness, synchronization.

All three formulas are reconstructions of qualitative goals rather than
published definitions, and reports carry a note saying so.  Weighted
resolution runs over scheduled deliveries (one term per cluster): late
deliveries keep only a gamma fraction of their value, standing in for
client-side recovery quality of tiles that miss the deadline.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .errors import ScenarioError
from .hetnet import ResolutionLadder
from .scene import TileId
from .scheduling import Schedule, UserProgress

METRIC_NOTE = "weighted_resolution/smoothness/synchronization are reconstructed definitions"

DEFAULT_LATE_PENALTY = 0.5


@dataclass(frozen=True)
class QoEReport:
    weighted_resolution: float
    smoothness_per_user: dict[str, float]
    smoothness_min: float
    smoothness_mean: float
    synchronization_s: float

    def to_json_dict(self) -> dict:
        return {
            "weighted_resolution": self.weighted_resolution,
            "smoothness": {
                "per_user": dict(sorted(self.smoothness_per_user.items())),
                "aggregate_min": self.smoothness_min,
                "mean": self.smoothness_mean,
            },
            "synchronization_s": self.synchronization_s,
            "note": METRIC_NOTE,
        }


def weighted_resolution(
    sched: Schedule,
    weights: Mapping[TileId, float],
    ladder: ResolutionLadder,
    gamma: float = DEFAULT_LATE_PENALTY,
) -> float:
    """Significance-weighted delivered scale, normalized to 1.0 for all-top on time."""
    if not 0.0 <= gamma <= 1.0:
        raise ScenarioError("late penalty gamma must lie in [0, 1]")
    if not sched.clusters:
        raise ScenarioError("weighted resolution undefined for an empty schedule")
    num = 0.0
    den = 0.0
    for c in sorted(sched.clusters, key=lambda c: (c.bs, c.tile)):
        if c.tile not in weights:
            raise ScenarioError(f"missing significance weight for scheduled tile {tuple(c.tile)}")
        w = weights[c.tile]
        scale = ladder.scale(c.level)
        num += w * scale * (gamma if c.late else 1.0)
        den += w
    if den == 0.0:
        raise ScenarioError("weighted resolution undefined: total significance is zero")
    return num / den


def smoothness(progress: Mapping[str, UserProgress]) -> tuple[dict[str, float], float, float]:
    """Per-user on-time fractions plus the min (aggregate) and mean."""
    if not progress:
        raise ScenarioError("smoothness undefined without users")
    per_user = {u: p.on_time_fraction for u, p in progress.items()}
    values = list(per_user.values())
    return per_user, min(values), sum(values) / len(values)


def synchronization(progress: Mapping[str, UserProgress]) -> float:
    """Spread (max - min) of user completion times, in seconds."""
    if not progress:
        raise ScenarioError("synchronization undefined without users")
    times = [p.completion_s for p in progress.values()]
    return max(times) - min(times)


def qoe_report(
    sched: Schedule,
    progress: Mapping[str, UserProgress],
    weights: Mapping[TileId, float],
    ladder: ResolutionLadder,
    gamma: float = DEFAULT_LATE_PENALTY,
) -> QoEReport:
    per_user, agg_min, agg_mean = smoothness(progress)
    return QoEReport(
        weighted_resolution=weighted_resolution(sched, weights, ladder, gamma),
        smoothness_per_user=per_user,
        smoothness_min=agg_min,
        smoothness_mean=agg_mean,
        synchronization_s=synchronization(progress),
    )
