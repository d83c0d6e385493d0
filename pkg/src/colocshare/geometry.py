"""Planar regions, Poisson point sampling and fixed-radius neighbour queries."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

TORUS = "torus"
TRUNCATE = "truncate"


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle ``[0, width] x [0, height]`` in metres."""

    width: float
    height: float
    boundary_mode: str = TORUS

    def __post_init__(self):
        if not (math.isfinite(self.width) and math.isfinite(self.height)):
            raise InvalidParameterError("region sides must be finite")
        if self.width <= 0 or self.height <= 0:
            raise InvalidParameterError(
                f"region sides must be positive, got {self.width} x {self.height}")
        if self.boundary_mode not in (TORUS, TRUNCATE):
            raise InvalidParameterError(f"unknown boundary mode {self.boundary_mode!r}")

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def torus(self) -> bool:
        return self.boundary_mode == TORUS

    def to_dict(self) -> dict:
        return {"width": self.width, "height": self.height,
                "boundary_mode": self.boundary_mode}

    @classmethod
    def from_dict(cls, d: dict) -> "Region":
        return cls(float(d["width"]), float(d["height"]), d.get("boundary_mode", TORUS))


@dataclass(frozen=True)
class PointSet:
    points: np.ndarray
    region: Region

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("point coordinates must be finite")
        if pts.size and ((pts < 0).any() or (pts[:, 0] > self.region.width).any()
                         or (pts[:, 1] > self.region.height).any()):
            raise InvalidParameterError("points must lie inside the region")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def distance(a, b, region: Region):
    """Euclidean distance between (.., 2) arrays, wrapping on a torus region."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    if region.torus:
        d = np.minimum(d, np.array([region.width, region.height]) - d)
    return np.hypot(d[..., 0], d[..., 1])


def sample_ppp(region: Region, density: float, rng: np.random.Generator) -> PointSet:
    """Homogeneous Poisson point process of ``density`` points per m^2 on ``region``."""
    if not math.isfinite(density) or density < 0:
        raise InvalidParameterError(f"density must be finite and >= 0, got {density}")
    n = rng.poisson(density * region.area)
    pts = rng.uniform(0.0, 1.0, size=(n, 2)) * np.array([region.width, region.height])
    return PointSet(pts, region)


@dataclass(frozen=True)
class GridIndex:
    """Uniform-grid bucket index over a :class:`PointSet`.

    ``buckets`` maps integer cell coordinates to arrays of point ids.  Queries with
    a radius larger than ``cell_size`` scan a correspondingly wider block of cells.
    """

    points: PointSet
    cell_size: float
    buckets: dict = field(repr=False)
    shape: tuple

    @property
    def region(self) -> Region:
        return self.points.region


def build_index(points: PointSet, cell_size: float) -> GridIndex:
    if not math.isfinite(cell_size) or cell_size <= 0:
        raise InvalidParameterError(f"cell_size must be > 0, got {cell_size}")
    region = points.region
    nx = max(1, math.ceil(region.width / cell_size))
    ny = max(1, math.ceil(region.height / cell_size))
    buckets = defaultdict(list)
    if len(points):
        cx = np.minimum((points.points[:, 0] // cell_size).astype(np.int64), nx - 1)
        cy = np.minimum((points.points[:, 1] // cell_size).astype(np.int64), ny - 1)
        for i, key in enumerate(zip(cx.tolist(), cy.tolist())):
            buckets[key].append(i)
    frozen = {k: np.array(v, dtype=np.int64) for k, v in buckets.items()}
    return GridIndex(points, float(cell_size), frozen, (nx, ny))


def _axis_cells(c, reach, n, torus):
    if torus:
        if 2 * reach + 1 >= n:
            return range(n)
        return sorted({(c + o) % n for o in range(-reach, reach + 1)})
    return range(max(0, c - reach), min(n - 1, c + reach) + 1)


def neighbors_within(index: GridIndex, center, r: float) -> list[int]:
    """Ids of indexed points within distance ``r`` of ``center`` (inclusive), ascending."""
    if r < 0:
        raise InvalidParameterError(f"radius must be >= 0, got {r}")
    if not index.buckets:
        return []
    region = index.region
    s = index.cell_size
    nx, ny = index.shape
    cx = min(max(int(center[0] // s), 0), nx - 1)
    cy = min(max(int(center[1] // s), 0), ny - 1)
    reach = math.ceil(r / s) if r > 0 else 1
    if region.torus:
        # the wrap-around cell may be narrower than cell_size
        reach += 1
    ids = [index.buckets[(gx, gy)]
           for gx in _axis_cells(cx, reach, nx, region.torus)
           for gy in _axis_cells(cy, reach, ny, region.torus)
           if (gx, gy) in index.buckets]
    if not ids:
        return []
    cand = np.concatenate(ids)
    d = distance(index.points.points[cand], np.asarray(center, dtype=np.float64), region)
    return sorted(cand[d <= r].tolist())
