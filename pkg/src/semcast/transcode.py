"""Per-BS transcoding: pick a ladder level per tile under a bit budget.

Semantic mode maximizes the level sum weighted by tile significance;
conventional mode maximizes the plain level sum.  Levels enter the objective
as 1-based ladder indices by default; set unit="scale" to score by resolution
fraction instead.

Two solvers share the objective: an exhaustive depth-first search (exact, for
small instances and as an oracle) and a genetic algorithm whose population is
kept feasible by a repair step that downgrades the cheapest-value-per-bit
tiles first.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .errors import InfeasibleError, InstanceTooLargeError, ScenarioError
from .hetnet import DeliveryBudget, ResolutionLadder, tile_cost
from .scene import TileId

SEMANTIC = "semantic"
CONVENTIONAL = "conventional"

ENUM_NODE_LIMIT = 10_000_000

LevelAssignment = dict[TileId, int]


@dataclass(frozen=True)
class GaParams:
    population_size: int = 64
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 0.05
    elitism_count: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ScenarioError("GA invariant violated: population_size >= 2")
        if not 0 <= self.elitism_count < self.population_size:
            raise ScenarioError("GA invariant violated: elitism_count < population_size")
        for name in ("crossover_rate", "mutation_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ScenarioError(f"GA invariant violated: {name} in [0, 1]")
        if self.generations < 0:
            raise ScenarioError("GA invariant violated: generations >= 0")


def _level_value(level: int, ladder: ResolutionLadder, unit: str) -> float:
    if unit == "index":
        return float(level)
    if unit == "scale":
        return ladder.scale(level)
    raise ScenarioError(f"unknown objective unit {unit!r}; expected 'index' or 'scale'")


def objective(
    assignment: Mapping[TileId, int],
    weights: Mapping[TileId, float],
    mode: str,
    ladder: Optional[ResolutionLadder] = None,
    unit: str = "index",
) -> float:
    """Score an assignment; semantic mode weights each tile's level by significance."""
    if unit == "scale" and ladder is None:
        raise ScenarioError("scale objective requires the ladder")
    total = 0.0
    for tile in sorted(assignment):
        value = (
            float(assignment[tile]) if unit == "index" else ladder.scale(assignment[tile])
        )
        if mode == SEMANTIC:
            if tile not in weights:
                raise ScenarioError(f"semantic objective missing weight for tile {tuple(tile)}")
            total += weights[tile] * value
        elif mode == CONVENTIONAL:
            total += value
        else:
            raise ScenarioError(f"unknown mode {mode!r}")
    return total


def assignment_cost(
    assignment: Mapping[TileId, int], ladder: ResolutionLadder, budget: DeliveryBudget
) -> float:
    """Total bits of an assignment, summed in tile-lexicographic order."""
    total = 0.0
    for tile in sorted(assignment):
        total += tile_cost(assignment[tile], ladder, budget)
    return total


def _check_baseline(
    tiles: Sequence[TileId], budget_bits: float, ladder: ResolutionLadder, budget: DeliveryBudget
) -> None:
    floor_cost = len(tiles) * tile_cost(1, ladder, budget)
    if floor_cost > budget_bits:
        raise InfeasibleError(
            f"transcoding infeasible: {len(tiles)} tiles need {floor_cost:.0f} bits at the "
            f"lowest level but the budget is {budget_bits:.0f} bits "
            f"(deficit {floor_cost - budget_bits:.0f})"
        )


def optimize_levels_exact(
    tiles: Sequence[TileId],
    weights: Mapping[TileId, float],
    budget_bits: float,
    ladder: ResolutionLadder,
    budget: DeliveryBudget,
    mode: str,
    unit: str = "index",
) -> LevelAssignment:
    """Globally optimal assignment by depth-first enumeration.

    Ties resolve to the lexicographically smallest level vector in tile order.
    Guarded by ENUM_NODE_LIMIT on the L**n search space.
    """
    order = sorted(tiles)
    n = len(order)
    levels = ladder.n_levels
    if levels**n > ENUM_NODE_LIMIT:
        raise InstanceTooLargeError(
            f"exact transcoding enumeration of {levels}**{n} assignments exceeds "
            f"{ENUM_NODE_LIMIT}"
        )
    if n == 0:
        return {}
    _check_baseline(order, budget_bits, ladder, budget)

    costs = [tile_cost(lv, ladder, budget) for lv in range(1, levels + 1)]
    gains = []
    for tile in order:
        if mode == SEMANTIC:
            w = weights[tile]
        elif mode == CONVENTIONAL:
            w = 1.0
        else:
            raise ScenarioError(f"unknown mode {mode!r}")
        gains.append([w * _level_value(lv, ladder, unit) for lv in range(1, levels + 1)])
    # Cheapest completion of the remaining suffix, for budget pruning.
    min_tail = [0.0] * (n + 1)
    for i in range(n - 1, -1, -1):
        min_tail[i] = min_tail[i + 1] + costs[0]

    best_score = -1.0
    best: list[int] = []
    current: list[int] = []

    def descend(i: int, spent: float, score: float) -> None:
        nonlocal best_score, best
        if i == n:
            if score > best_score:
                best_score = score
                best = current.copy()
            return
        for lv in range(1, levels + 1):
            cost = costs[lv - 1]
            if spent + cost + min_tail[i + 1] > budget_bits:
                continue
            current.append(lv)
            descend(i + 1, spent + cost, score + gains[i][lv - 1])
            current.pop()

    descend(0, 0.0, 0.0)
    return {tile: lv for tile, lv in zip(order, best)}


def repair(
    genome: list[int],
    order: Sequence[TileId],
    weights: Mapping[TileId, float],
    budget_bits: float,
    ladder: ResolutionLadder,
    budget: DeliveryBudget,
    mode: str,
    unit: str = "index",
) -> list[int]:
    """Downgrade tiles until the genome fits the budget.

    Picks the tile losing the least objective value per bit saved, one ladder
    step at a time; deterministic via tile-order tie-breaking.
    """
    levels = ladder.n_levels
    costs = [tile_cost(lv, ladder, budget) for lv in range(1, levels + 1)]
    genome = list(genome)

    def canonical_spent() -> float:
        total = 0.0
        for g in genome:
            total += costs[g - 1]
        return total

    # Incremental cost tracking is cheap but can drift by an ulp, so the exit
    # condition is always re-verified against the canonical sum.
    spent = canonical_spent()
    while spent > budget_bits:
        best_idx = -1
        best_rate = None
        for i, g in enumerate(genome):
            if g <= 1:
                continue
            w = weights[order[i]] if mode == SEMANTIC else 1.0
            value_drop = w * (
                _level_value(g, ladder, unit) - _level_value(g - 1, ladder, unit)
            )
            bits_saved = costs[g - 1] - costs[g - 2]
            rate = value_drop / bits_saved
            if best_rate is None or rate < best_rate:
                best_rate = rate
                best_idx = i
        if best_idx < 0:
            raise InfeasibleError(
                "repair impossible: all tiles already at the lowest level over budget"
            )
        spent -= costs[genome[best_idx] - 1] - costs[genome[best_idx] - 2]
        genome[best_idx] -= 1
        if spent <= budget_bits:
            spent = canonical_spent()
    return genome


def optimize_levels_ga(
    tiles: Sequence[TileId],
    weights: Mapping[TileId, float],
    budget_bits: float,
    ladder: ResolutionLadder,
    budget: DeliveryBudget,
    mode: str,
    params: GaParams,
    unit: str = "index",
) -> LevelAssignment:
    """Feasible level assignment via a seeded, elitist genetic algorithm.

    The initial population contains the repaired all-top-level genome and the
    all-bottom genome, so the result never scores below the floor baseline and
    reaches the unconstrained optimum whenever the budget allows it.
    """
    order = sorted(tiles)
    n = len(order)
    if n == 0:
        return {}
    _check_baseline(order, budget_bits, ladder, budget)
    levels = ladder.n_levels
    rng = random.Random(params.rng_seed)

    def fitness(genome: list[int]) -> float:
        total = 0.0
        for i, g in enumerate(genome):
            w = weights[order[i]] if mode == SEMANTIC else 1.0
            total += w * _level_value(g, ladder, unit)
        return total

    def fix(genome: list[int]) -> list[int]:
        return repair(genome, order, weights, budget_bits, ladder, budget, mode, unit)

    population = [fix([levels] * n), [1] * n]
    while len(population) < params.population_size:
        population.append(fix([rng.randint(1, levels) for _ in range(n)]))
    population = population[: params.population_size]

    scored = sorted(
        ((fitness(g), g) for g in population), key=lambda p: (-p[0], p[1])
    )
    best_score, best = scored[0]

    for _ in range(params.generations):
        nxt = [g for _, g in scored[: params.elitism_count]]
        while len(nxt) < params.population_size:
            a = _tournament(scored, rng)
            b = _tournament(scored, rng)
            if rng.random() < params.crossover_rate:
                child = [a[i] if rng.random() < 0.5 else b[i] for i in range(n)]
            else:
                child = list(a)
            for i in range(n):
                if rng.random() < params.mutation_rate:
                    child[i] = rng.randint(1, levels)
            nxt.append(fix(child))
        population = nxt
        scored = sorted(
            ((fitness(g), g) for g in population), key=lambda p: (-p[0], p[1])
        )
        if scored[0][0] > best_score:
            best_score, best = scored[0]

    costs = costs_of(ladder, budget)
    best = _polish(best, fitness, costs, budget_bits, levels)
    if n <= 12:
        best = _swap_polish(best, fitness, costs, budget_bits, levels)
    return {tile: lv for tile, lv in zip(order, best)}


def costs_of(ladder: ResolutionLadder, budget: DeliveryBudget) -> list[float]:
    return [tile_cost(lv, ladder, budget) for lv in range(1, ladder.n_levels + 1)]


def _polish(genome, fitness, costs, budget_bits, levels):
    """Deterministic single-gene descent: keeps feasibility, only improves."""
    genome = list(genome)
    score = fitness(genome)

    def canonical_spent() -> float:
        total = 0.0
        for g in genome:
            total += costs[g - 1]
        return total

    improved = True
    while improved:
        improved = False
        for i in range(len(genome)):
            old = genome[i]
            for lv in range(1, levels + 1):
                if lv == old:
                    continue
                genome[i] = lv
                if canonical_spent() > budget_bits:
                    genome[i] = old
                    continue
                trial = fitness(genome)
                if trial > score:
                    score = trial
                    old = lv
                    improved = True
                else:
                    genome[i] = old
    return genome


def _swap_polish(genome, fitness, costs, budget_bits, levels):
    """Paired raise/lower moves; escapes optima single-gene descent cannot."""
    genome = list(genome)
    score = fitness(genome)

    def canonical_spent() -> float:
        total = 0.0
        for g in genome:
            total += costs[g - 1]
        return total

    improved = True
    while improved:
        improved = False
        n = len(genome)
        for i in range(n):
            for j in range(n):
                if j == i or genome[i] >= levels or genome[j] <= 1:
                    continue
                genome[i] += 1
                genome[j] -= 1
                if canonical_spent() <= budget_bits:
                    trial = fitness(genome)
                    if trial > score:
                        score = trial
                        improved = True
                        continue
                genome[i] -= 1
                genome[j] += 1
    return genome


def _tournament(scored: list[tuple[float, list[int]]], rng: random.Random, k: int = 3):
    picks = [scored[rng.randrange(len(scored))] for _ in range(k)]
    picks.sort(key=lambda p: (-p[0], p[1]))
    return picks[0][1]


def avg_level_buckets(
    pairs: Sequence[tuple[float, int]], bucket_count: int
) -> list[Optional[float]]:
    """Mean level per equal-width weight bucket over (weight, level) pairs.

    Bucket 0 covers the lowest weights; None marks an empty bucket.  A
    zero-width weight range puts everything in bucket 0.
    """
    if bucket_count < 1:
        raise ScenarioError("bucket_count must be >= 1")
    if not pairs:
        return [None] * bucket_count
    ws = [w for w, _ in pairs]
    lo, hi = min(ws), max(ws)
    width = (hi - lo) / bucket_count
    sums = [0.0] * bucket_count
    counts = [0] * bucket_count
    for w, level in pairs:
        idx = min(int((w - lo) / width), bucket_count - 1) if width > 0 else 0
        sums[idx] += level
        counts[idx] += 1
    return [sums[i] / counts[i] if counts[i] else None for i in range(bucket_count)]


def avg_level_by_significance(
    assignment: Mapping[TileId, int],
    weights: Mapping[TileId, float],
    bucket_count: int,
) -> list[Optional[float]]:
    """Mean level index per significance bucket for one assignment."""
    tiles = sorted(assignment)
    return avg_level_buckets([(weights[t], assignment[t]) for t in tiles], bucket_count)


def top_bucket_mean(bucket_means: Sequence[Optional[float]]) -> Optional[float]:
    """Mean level of the highest-significance non-empty bucket."""
    for m in reversed(bucket_means):
        if m is not None:
            return m
    return None
