"""Benchmark reward functions with additive Gaussian observation noise.

All objectives are posed as maximization problems.  The two classic
minimization benchmarks (Branin, Hartmann 4-D) are therefore negated; the
two projection benchmarks are maximized as written.  Regret is always
measured against the objective's optimum restricted to the evaluation
grid, since the algorithms can only ever query grid points.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import GridDomain
from .kernels import as_points


def sample_theta_star(rng: np.random.Generator, d: int) -> np.ndarray:
    """Uniform draw from the surface of the unit sphere in d dimensions."""
    if d < 1:
        raise ValueError("d must be positive")
    g = rng.standard_normal(d)
    norm = np.linalg.norm(g)
    while norm == 0.0:  # probability-zero guard
        g = rng.standard_normal(d)
        norm = np.linalg.norm(g)
    return g / norm


class Objective:
    """A deterministic reward function over a box or unit-ball domain."""

    name: str = ""

    def __init__(self, dim: int, bounds, ball: bool = False):
        self.dim = dim
        self.bounds = np.asarray(bounds, dtype=float)
        self.ball = ball
        self._cached_grid: GridDomain | None = None
        self._cached_opt: tuple[int, float] | None = None

    def _evaluate(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _check_domain(self, pts: np.ndarray) -> None:
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        if np.any(pts < lo - 1e-9) or np.any(pts > hi + 1e-9):
            raise ValueError(f"point outside the {self.name} domain")
        if self.ball and np.any(np.einsum("ij,ij->i", pts, pts) > 1.0 + 1e-9):
            raise ValueError(f"point outside the unit ball domain of {self.name}")

    def value(self, X):
        """Noiseless objective value at one point (scalar) or a batch."""
        arr = np.asarray(X, dtype=float)
        single = arr.ndim == 1
        pts = as_points(arr, dim=self.dim)
        self._check_domain(pts)
        vals = self._evaluate(pts)
        return float(vals[0]) if single else vals

    def grid_optimum(self, grid: GridDomain) -> tuple[int, float]:
        """(flat index, value) of the grid-restricted maximum; cached."""
        if self._cached_grid is not grid:
            vals = self.value(grid.points)
            idx = int(np.argmax(vals))
            self._cached_grid = grid
            self._cached_opt = (idx, float(vals[idx]))
        return self._cached_opt


def eval_objective(objective: Objective, x) -> float:
    """Noiseless value at a single point."""
    return objective.value(np.asarray(x, dtype=float).ravel())


def noisy_query(objective: Objective, x, noise_std: float,
                rng: np.random.Generator) -> float:
    """f(x) plus one N(0, noise_std^2) draw from the given stream."""
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    return eval_objective(objective, x) + noise_std * rng.standard_normal()


class CosineRidge(Objective):
    """cos(3 x.theta) over the unit ball; maximum 1 on the hyperplane x.theta = 0."""

    name = "h1"

    def __init__(self, theta: np.ndarray, dim: int = 10):
        super().__init__(dim, np.column_stack([-np.ones(dim), np.ones(dim)]), ball=True)
        self.theta = np.asarray(theta, dtype=float).ravel()
        if len(self.theta) != dim:
            raise ValueError("theta must match the objective dimension")

    def _evaluate(self, pts):
        return np.cos(3.0 * pts @ self.theta)


class CubicRidge(Objective):
    """s^3 - 3 s^2 + 3 s + 3 with s = x.theta, over the unit ball.

    Strictly nondecreasing in s (derivative 3 (s - 1)^2), so the maximum sits
    at the point with the largest projection onto theta.
    """

    name = "h2"

    def __init__(self, theta: np.ndarray, dim: int = 10):
        super().__init__(dim, np.column_stack([-np.ones(dim), np.ones(dim)]), ball=True)
        self.theta = np.asarray(theta, dtype=float).ravel()
        if len(self.theta) != dim:
            raise ValueError("theta must match the objective dimension")

    def _evaluate(self, pts):
        s = pts @ self.theta
        return s**3 - 3.0 * s**2 + 3.0 * s + 3.0


class Branin(Objective):
    """Negated Branin function, rescaled to the unit square [0, 1]^2.

    The classic form lives on [-5, 10] x [0, 15] with three global minima of
    value 0.39788735772973816; negation turns them into the maxima here.
    """

    name = "branin"

    def __init__(self):
        super().__init__(2, [(0.0, 1.0), (0.0, 1.0)])

    def _evaluate(self, pts):
        x1 = 15.0 * pts[:, 0] - 5.0
        x2 = 15.0 * pts[:, 1]
        b = 5.1 / (4.0 * math.pi**2)
        c = 5.0 / math.pi
        t = 1.0 / (8.0 * math.pi)
        val = (x2 - b * x1**2 + c * x1 - 6.0) ** 2 + 10.0 * (1.0 - t) * np.cos(x1) + 10.0
        return -val


# Hartmann 4-D constants: the first four columns of the classic 6-D matrices,
# with the rescaled output (1.1 - sum)/0.839 of Picheny et al.'s benchmark set.
_HARTMANN_ALPHA = np.array([1.0, 1.2, 3.0, 3.2])
_HARTMANN_A = np.array(
    [
        [10.0, 3.0, 17.0, 3.5],
        [0.05, 10.0, 17.0, 0.1],
        [3.0, 3.5, 1.7, 10.0],
        [17.0, 8.0, 0.05, 10.0],
    ]
)
_HARTMANN_P = 1e-4 * np.array(
    [
        [1312.0, 1696.0, 5569.0, 124.0],
        [2329.0, 4135.0, 8307.0, 3736.0],
        [2348.0, 1451.0, 3522.0, 2883.0],
        [4047.0, 8828.0, 8732.0, 5743.0],
    ]
)


class Hartmann4(Objective):
    """Negated rescaled Hartmann function on [0, 1]^4 (maximization form)."""

    name = "hartmann4"

    def __init__(self):
        super().__init__(4, [(0.0, 1.0)] * 4)

    def _evaluate(self, pts):
        # (n, 4, 4): squared deviations weighted per component
        sq = (pts[:, None, :] - _HARTMANN_P[None, :, :]) ** 2
        inner = np.sum(_HARTMANN_A[None, :, :] * sq, axis=2)
        outer = np.sum(_HARTMANN_ALPHA[None, :] * np.exp(-inner), axis=1)
        return -(1.1 - outer) / 0.839


OBJECTIVE_NAMES = ("h1", "h2", "branin", "hartmann4")


def make_objective(name: str, rng: np.random.Generator | None = None,
                   dim: int = 10) -> Objective:
    """Build an objective by config name.

    ``h1`` and ``h2`` draw their projection direction from ``rng`` (required);
    ``dim`` applies to those two only.
    """
    if name in ("h1", "h2"):
        if rng is None:
            raise ValueError(f"objective {name!r} needs a random stream for theta")
        theta = sample_theta_star(rng, dim)
        return CosineRidge(theta, dim) if name == "h1" else CubicRidge(theta, dim)
    if name == "branin":
        return Branin()
    if name == "hartmann4":
        return Hartmann4()
    raise ValueError(f"unknown objective {name!r}; expected one of {OBJECTIVE_NAMES}")
