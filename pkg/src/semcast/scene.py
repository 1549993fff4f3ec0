"""Source-frame model: tile grid, per-tile feature fractions, viewports, scenario files.

A scenario file bundles everything one delivery run needs: the grid, the
per-tile semantic-feature distribution, per-user attention vectors and
viewport requests, the network topology, the resolution ladder, and the
delivery budget.  Scenario objects are immutable after load and safe to
share across threads.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, ScenarioError
from .hetnet import (
    DeliveryBudget,
    HetNetTopology,
    ResolutionLadder,
    parse_topology,
    topology_to_dict,
)


class TileId(NamedTuple):
    row: int
    col: int


@dataclass(frozen=True)
class TileGrid:
    """Partition of a frame into rows x cols rectangular tiles.

    Base tile size is the floor division of the frame dimensions; the last
    row/column absorbs any remainder pixels, so every pixel belongs to
    exactly one tile.
    """

    frame_width: int
    frame_height: int
    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ScenarioError("grid invariant violated: rows >= 1 and cols >= 1")
        if self.frame_width < self.cols or self.frame_height < self.rows:
            raise ScenarioError(
                "grid invariant violated: frame must have at least one pixel per tile"
            )

    @property
    def base_tile_width(self) -> int:
        return self.frame_width // self.cols

    @property
    def base_tile_height(self) -> int:
        return self.frame_height // self.rows

    def contains(self, tile: TileId) -> bool:
        return 0 <= tile.row < self.rows and 0 <= tile.col < self.cols

    def all_tiles(self) -> Iterator[TileId]:
        for r in range(self.rows):
            for c in range(self.cols):
                yield TileId(r, c)

    def tile_pixel_box(self, tile: TileId) -> tuple[int, int, int, int]:
        """Pixel bounds (x0, y0, x1, y1) of a tile, end-exclusive."""
        if not self.contains(tile):
            raise ScenarioError(f"tile {tuple(tile)} outside {self.rows}x{self.cols} grid")
        bw, bh = self.base_tile_width, self.base_tile_height
        x0 = tile.col * bw
        y0 = tile.row * bh
        x1 = self.frame_width if tile.col == self.cols - 1 else x0 + bw
        y1 = self.frame_height if tile.row == self.rows - 1 else y0 + bh
        return x0, y0, x1, y1


def tiles_of_viewport(grid: TileGrid, r1: int, c1: int, r2: int, c2: int) -> frozenset[TileId]:
    """Tiles of the inclusive rectangle (r1, c1)..(r2, c2)."""
    if r1 > r2 or c1 > c2:
        raise ScenarioError(f"viewport rectangle degenerate: ({r1},{c1})..({r2},{c2})")
    if r1 < 0 or c1 < 0 or r2 >= grid.rows or c2 >= grid.cols:
        raise ScenarioError(
            f"viewport rectangle ({r1},{c1})..({r2},{c2}) outside {grid.rows}x{grid.cols} grid"
        )
    return frozenset(TileId(r, c) for r in range(r1, r2 + 1) for c in range(c1, c2 + 1))


@dataclass(frozen=True)
class FeatureDistribution:
    """Per-tile fractions of pixels occupied by each semantic feature class.

    fractions has shape (rows, cols, K); entries are in [0, 1] and sum to at
    most 1 per tile (the remainder is featureless background).
    """

    fractions: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.fractions, dtype=float)
        if arr.ndim != 3:
            raise ScenarioError("features invariant violated: expected rows x cols x K array")
        if np.any(arr < 0.0) or np.any(arr > 1.0):
            raise ScenarioError("features invariant violated: entries must lie in [0, 1]")
        if np.any(arr.sum(axis=2) > 1.0 + 1e-9):
            raise ScenarioError("features invariant violated: per-tile fractions must sum to <= 1")
        object.__setattr__(self, "fractions", arr)

    @property
    def n_features(self) -> int:
        return self.fractions.shape[2]

    def vector(self, tile: TileId) -> Sequence[float]:
        return self.fractions[tile.row, tile.col].tolist()

    def __eq__(self, other):
        return isinstance(other, FeatureDistribution) and np.array_equal(
            self.fractions, other.fractions
        )


@dataclass(frozen=True)
class FoVRequest:
    """One user's requested tile set; rectangular viewports remember their rect."""

    user: str
    tiles: frozenset[TileId]
    rect: Optional[tuple[int, int, int, int]] = None  # (r1, c1, r2, c2) when rectangular

    def __post_init__(self):
        if not self.tiles:
            raise ScenarioError(f"fov invariant violated: user {self.user} requests no tiles")


@dataclass(frozen=True)
class Scenario:
    grid: TileGrid
    features: FeatureDistribution
    uoa: dict[str, tuple[float, ...]]  # user -> attention per feature class
    fov_requests: tuple[FoVRequest, ...] = ()
    topology: Optional[HetNetTopology] = None
    ladder: Optional[ResolutionLadder] = None
    budget: Optional[DeliveryBudget] = None
    foreground_threshold: float = 0.0

    def __post_init__(self):
        k = self.features.n_features
        if self.features.fractions.shape[:2] != (self.grid.rows, self.grid.cols):
            raise ScenarioError(
                "scenario invariant violated: features shape "
                f"{self.features.fractions.shape[:2]} != grid {self.grid.rows}x{self.grid.cols}"
            )
        users = [req.user for req in self.fov_requests]
        if len(set(users)) != len(users):
            raise ScenarioError("scenario invariant violated: duplicate user ids")
        for req in self.fov_requests:
            if req.user not in self.uoa:
                raise ScenarioError(f"scenario invariant violated: user {req.user} has no UOA vector")
            for t in req.tiles:
                if not self.grid.contains(t):
                    raise ScenarioError(
                        f"scenario invariant violated: user {req.user} FoV tile {tuple(t)} "
                        f"outside {self.grid.rows}x{self.grid.cols} grid"
                    )
        for user, vec in self.uoa.items():
            if len(vec) != k:
                raise ScenarioError(
                    f"scenario invariant violated: UOA vector of user {user} has length "
                    f"{len(vec)}, expected {k} feature classes"
                )
            if any(v < 0.0 or v > 1.0 for v in vec):
                raise ScenarioError(
                    f"scenario invariant violated: UOA entries of user {user} must lie in [0, 1]"
                )
        if self.topology is not None:
            covered = self.topology.all_covered_users()
            for req in self.fov_requests:
                if req.user not in covered:
                    raise ScenarioError(
                        f"scenario invariant violated: requesting user {req.user} not covered "
                        "by any base station"
                    )
        if self.foreground_threshold < 0.0:
            raise ScenarioError("scenario invariant violated: foreground_threshold must be >= 0")

    @property
    def users(self) -> tuple[str, ...]:
        return tuple(req.user for req in self.fov_requests)

    def fov_of(self, user: str) -> FoVRequest:
        for req in self.fov_requests:
            if req.user == user:
                return req
        raise KeyError(user)

    def requested_tiles(self) -> frozenset[TileId]:
        out: set[TileId] = set()
        for req in self.fov_requests:
            out |= req.tiles
        return frozenset(out)


def _parse_fov(grid: TileGrid, user: str, fov: dict) -> FoVRequest:
    if "tiles" in fov:
        tiles = frozenset(TileId(int(r), int(c)) for r, c in fov["tiles"])
        return FoVRequest(user=user, tiles=tiles)
    missing = [k for k in ("r1", "c1", "r2", "c2") if k not in fov]
    if missing:
        raise ScenarioError(f"user {user}: fov must give r1,c1,r2,c2 or a tiles list")
    rect = (int(fov["r1"]), int(fov["c1"]), int(fov["r2"]), int(fov["c2"]))
    return FoVRequest(user=user, tiles=tiles_of_viewport(grid, *rect), rect=rect)


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        g = doc["grid"]
        grid = TileGrid(
            frame_width=int(g["width_px"]),
            frame_height=int(g["height_px"]),
            rows=int(g["rows"]),
            cols=int(g["cols"]),
        )
        features = FeatureDistribution(np.asarray(doc["features"], dtype=float))
        uoa = {}
        fovs = []
        for u in doc["users"]:
            uid = str(u["id"])
            uoa[uid] = tuple(float(x) for x in u["uoa"])
            fovs.append(_parse_fov(grid, uid, u["fov"]))
        topology = parse_topology(doc["topology"])
        ladder = ResolutionLadder.from_dicts(doc["ladder"])
        d = doc["delivery"]
        budget = DeliveryBudget(
            deadline_s=float(d["deadline_ms"]) / 1000.0,
            slot_s=float(d["slot_ms"]) / 1000.0,
            base_tile_bits=float(d["base_tile_bits"]),
        )
        threshold = float(d.get("foreground_threshold", 0.0))
    except KeyError as exc:
        raise ScenarioError(f"scenario schema missing key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"scenario schema value error: {exc}") from exc
    return Scenario(
        grid=grid,
        features=features,
        uoa=uoa,
        fov_requests=tuple(fovs),
        topology=topology,
        ladder=ladder,
        budget=budget,
        foreground_threshold=threshold,
    )


def scenario_to_dict(sc: Scenario) -> dict:
    users = []
    for req in sc.fov_requests:
        if req.rect is not None:
            r1, c1, r2, c2 = req.rect
            fov = {"r1": r1, "c1": c1, "r2": r2, "c2": c2}
        else:
            fov = {"tiles": sorted([t.row, t.col] for t in req.tiles)}
        users.append({"id": req.user, "uoa": list(sc.uoa[req.user]), "fov": fov})
    return {
        "grid": {
            "width_px": sc.grid.frame_width,
            "height_px": sc.grid.frame_height,
            "rows": sc.grid.rows,
            "cols": sc.grid.cols,
        },
        "features": sc.features.fractions.tolist(),
        "users": users,
        "topology": topology_to_dict(sc.topology),
        "ladder": [{"name": lv.name, "scale": lv.scale} for lv in sc.ladder.levels],
        "delivery": {
            "deadline_ms": sc.budget.deadline_s * 1000.0,
            "slot_ms": sc.budget.slot_s * 1000.0,
            "base_tile_bits": sc.budget.base_tile_bits,
            "foreground_threshold": sc.foreground_threshold,
        },
    }


def load_scenario(path) -> Scenario:
    """Load and fully validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError as exc:
        raise ScenarioError(f"scenario file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"scenario parse error in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return scenario_from_dict(doc)


def dump_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(sc), fh, indent=2, sort_keys=True)
        fh.write("\n")
