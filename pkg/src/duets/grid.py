"""Finite domain discretizations and active-region bookkeeping.

The continuous domain is represented only through a fixed finite grid:
sampling, suprema, and trimming all operate on grid points.  Tie-breaking
is by lowest flat index everywhere, which keeps every decision bitwise
reproducible across agents and the server.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ProtocolInvariantError

_BALL_CHUNK = 200_000


class GridDomain:
    """A fixed finite discretization of a box or unit-ball domain."""

    def __init__(self, points: np.ndarray, bounds: np.ndarray, mode: str):
        self.points = np.ascontiguousarray(points, dtype=float)
        self.bounds = np.asarray(bounds, dtype=float)
        self.mode = mode
        if len(self.points) == 0:
            raise ValueError("grid must contain at least one point")

    @classmethod
    def box(cls, bounds, resolution) -> "GridDomain":
        """Regular lattice over a box; ``resolution`` points per axis.

        ``resolution`` may be a single int or one int per axis.  Flat index
        order follows ``meshgrid(indexing='ij')``: the last axis varies
        fastest.
        """
        bounds = np.asarray(bounds, dtype=float)
        if bounds.ndim != 2 or bounds.shape[1] != 2:
            raise ValueError("bounds must be a sequence of (lo, hi) pairs")
        d = len(bounds)
        res = np.broadcast_to(np.asarray(resolution, dtype=int), (d,))
        if np.any(res < 1):
            raise ValueError("resolution must be at least 1 per axis")
        axes = [np.linspace(lo, hi, r) for (lo, hi), r in zip(bounds, res)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        return cls(pts, bounds, "box")

    @classmethod
    def unit_ball(cls, dim: int, n_points: int, seed: int = 0) -> "GridDomain":
        """Rejection-sampled grid of ``n_points`` uniform points in the unit ball.

        The construction seed is part of the domain definition: the same
        (dim, n_points, seed) always yields the identical grid.
        """
        if dim < 1 or n_points < 1:
            raise ValueError("dim and n_points must be positive")
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, dim, n_points])))
        chunks, total = [], 0
        while total < n_points:
            cand = rng.uniform(-1.0, 1.0, size=(_BALL_CHUNK, dim))
            keep = cand[np.einsum("ij,ij->i", cand, cand) <= 1.0]
            chunks.append(keep)
            total += len(keep)
        pts = np.concatenate(chunks)[:n_points]
        bounds = np.column_stack([-np.ones(dim), np.ones(dim)])
        return cls(pts, bounds, "ball")

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def max_spacing(self) -> float:
        """Largest per-axis lattice spacing (box grids only)."""
        if self.mode != "box":
            raise ValueError("spacing is defined for box grids only")
        spacing = 0.0
        for axis in range(self.dimension):
            vals = np.unique(self.points[:, axis])
            if len(vals) > 1:
                spacing = max(spacing, float(np.max(np.diff(vals))))
        return spacing


def nearest_grid_point(grid: GridDomain, x) -> np.ndarray:
    """Grid point closest to x in Euclidean distance; ties take lowest index."""
    x = np.asarray(x, dtype=float).ravel()
    if len(x) != grid.dimension:
        raise ValueError(f"point has dimension {len(x)}, grid is {grid.dimension}-d")
    lo, hi = grid.bounds[:, 0], grid.bounds[:, 1]
    if np.any(x < lo - 1e-9) or np.any(x > hi + 1e-9):
        raise ValueError(f"point {x} lies outside the domain bounds")
    diff = grid.points - x
    return grid.points[int(np.argmin(np.einsum("ij,ij->i", diff, diff)))]


@dataclass
class ActiveRegion:
    """Boolean mask over grid points: the not-yet-eliminated part of the domain."""

    grid: GridDomain
    mask: np.ndarray
    epoch: int = 1
    _indices: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.shape != (len(self.grid),):
            raise ValueError("mask must have one entry per grid point")
        if not self.mask.any():
            raise ProtocolInvariantError("active region may never be empty")

    @classmethod
    def full(cls, grid: GridDomain, epoch: int = 1) -> "ActiveRegion":
        return cls(grid, np.ones(len(grid), dtype=bool), epoch)

    @property
    def indices(self) -> np.ndarray:
        if self._indices is None:
            self._indices = np.flatnonzero(self.mask)
        return self._indices

    @property
    def count(self) -> int:
        return len(self.indices)

    def points(self) -> np.ndarray:
        return self.grid.points[self.indices]

    def is_subset_of(self, other: "ActiveRegion") -> bool:
        return bool(np.all(other.mask[self.mask]))


def _eval_over(fn, pts: np.ndarray) -> np.ndarray:
    """Apply fn to an (n, d) batch, falling back to a per-point loop."""
    try:
        vals = np.asarray(fn(pts), dtype=float)
    except Exception:
        vals = None
    if vals is None or vals.shape != (len(pts),):
        vals = np.array([float(fn(p)) for p in pts])
    return vals


def uniform_sample_indices(region: ActiveRegion, rng: np.random.Generator,
                           count: int) -> np.ndarray:
    """Flat grid indices of ``count`` i.i.d. uniform draws over active points."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    idx = region.indices
    if len(idx) == 0:
        raise ProtocolInvariantError("cannot sample from an empty region")
    return idx[rng.integers(0, len(idx), size=count)]


def uniform_sample(region: ActiveRegion, rng: np.random.Generator,
                   count: int) -> np.ndarray:
    """``count`` points drawn i.i.d. uniformly over the active grid points."""
    return region.grid.points[uniform_sample_indices(region, rng, count)]


def sup_over_region(region: ActiveRegion, fn) -> tuple[np.ndarray, float]:
    """(argmax point, max value) of fn over the active grid points."""
    pts = region.points()
    if len(pts) == 0:
        raise ProtocolInvariantError("cannot take a supremum over an empty region")
    vals = _eval_over(fn, pts)
    i = int(np.argmax(vals))
    return pts[i], float(vals[i])


def trim(region: ActiveRegion, mean_fn, beta: float, sigma_max: float) -> ActiveRegion:
    """Keep the active points whose estimated value is within ``2 * beta *
    sigma_max`` of the current estimated maximum.

    The threshold point itself always survives, so the result is never
    empty.  Deterministic: identical inputs produce the identical mask.
    """
    if beta < 0 or sigma_max < 0:
        raise ValueError("beta and sigma_max must be nonnegative")
    idx = region.indices
    vals = _eval_over(mean_fn, region.grid.points[idx])
    keep = vals >= np.max(vals) - 2.0 * beta * sigma_max
    mask = np.zeros(len(region.grid), dtype=bool)
    mask[idx[keep]] = True
    return ActiveRegion(region.grid, mask, region.epoch + 1)
