"""Stationary kernels, Gram matrices, and information-gain diagnostics.

Everything downstream (posterior updates, inducing-point features, trimming
thresholds) is built on the two primitives here: pointwise kernel evaluation
and Gram-matrix assembly.  Squared distances are always computed pair by
pair, never via the dot-product trick, so Gram matrices come out bitwise
symmetric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import NumericalError

KERNEL_FAMILIES = ("se", "matern12", "matern32", "matern52")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``family`` is one of ``se`` (squared exponential) or ``matern12`` /
    ``matern32`` / ``matern52`` (Matern with smoothness 1/2, 3/2, 5/2).
    ``k(x, x) == variance_scale`` for every x, and every Gram matrix built
    from a spec is symmetric positive semi-definite up to roundoff.
    """

    family: str = "se"
    lengthscale: float = 1.0
    variance_scale: float = 1.0

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; expected one of {KERNEL_FAMILIES}"
            )
        if not self.lengthscale > 0:
            raise ValueError("lengthscale must be positive")
        if not self.variance_scale > 0:
            raise ValueError("variance_scale must be positive")


def as_points(X, dim: int | None = None) -> np.ndarray:
    """Coerce to an (n, d) float array; a single (d,) point becomes (1, d)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1) if X.size else X.reshape(0, 0)
    if X.ndim != 2:
        raise ValueError(f"expected points of shape (n, d), got {X.shape}")
    if dim is not None and len(X) and X.shape[1] != dim:
        raise ValueError(f"points have dimension {X.shape[1]}, expected {dim}")
    return X


def _kernel_from_sqdist(spec: KernelSpec, d2: np.ndarray) -> np.ndarray:
    ell = spec.lengthscale
    if spec.family == "se":
        return spec.variance_scale * np.exp(-0.5 * d2 / (ell * ell))
    r = np.sqrt(np.maximum(d2, 0.0)) / ell
    if spec.family == "matern12":
        prof = np.exp(-r)
    elif spec.family == "matern32":
        s = math.sqrt(3.0) * r
        prof = (1.0 + s) * np.exp(-s)
    else:  # matern52
        s = math.sqrt(5.0) * r
        prof = (1.0 + s + s * s / 3.0) * np.exp(-s)
    return spec.variance_scale * prof


def eval_kernel(spec: KernelSpec, x, xp) -> float:
    """k(x, x'); both points must share the same dimension."""
    x = np.asarray(x, dtype=float).ravel()
    xp = np.asarray(xp, dtype=float).ravel()
    if x.shape != xp.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {xp.shape[0]}")
    diff = x - xp
    return float(_kernel_from_sqdist(spec, np.dot(diff, diff)))


def kernel_matrix(spec: KernelSpec, X) -> np.ndarray:
    """Gram matrix {k(x_i, x_j)} of a point set; (0, 0) for an empty set."""
    X = as_points(X)
    if len(X) == 0:
        return np.zeros((0, 0))
    return _kernel_from_sqdist(spec, cdist(X, X, "sqeuclidean"))


def kernel_cross(spec: KernelSpec, X, Y) -> np.ndarray:
    """Cross matrix {k(x_i, y_j)} of shape (len(X), len(Y))."""
    X = as_points(X)
    Y = as_points(Y, dim=X.shape[1] if len(X) else None)
    if len(X) == 0 or len(Y) == 0:
        return np.zeros((len(X), len(Y)))
    return _kernel_from_sqdist(spec, cdist(X, Y, "sqeuclidean"))


def psd_tolerance(spec: KernelSpec, m: int) -> float:
    """How negative an eigenvalue may be before we call the matrix broken."""
    return 1e-9 * m * spec.variance_scale


def information_gain(spec: KernelSpec, X, lam: float) -> float:
    """(1/2) log det(I + K/lam) for the Gram matrix K of the point set X.

    Nonnegative, permutation invariant, and nondecreasing when points are
    appended.  Eigenvalues in [-tol, 0) are floored at zero; anything more
    negative raises :class:`NumericalError`.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    X = as_points(X)
    m = len(X)
    if m == 0:
        return 0.0
    K = kernel_matrix(spec, X)
    w = np.linalg.eigvalsh(K)
    if w[0] < -psd_tolerance(spec, m):
        raise NumericalError(
            f"kernel matrix has eigenvalue {w[0]:.3e} below tolerance; not PSD"
        )
    w = np.clip(w, 0.0, None)
    return 0.5 * float(np.sum(np.log1p(w / lam)))
