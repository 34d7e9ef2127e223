"""Exact and inducing-point (Nystrom) Gaussian-process posteriors.

Both posterior classes report variance on one common scale: the sparse
variance is ``k(x,x) - z(x)^T Z^T Z (lam*I + Z^T Z)^{-1} z(x)``, which
coincides exactly with the exact posterior variance whenever the inducing
set spans the conditioning set.  Mixing the two scales is the classic
silent-``lam``-factor bug, so the raw ``lam * variance`` form never leaves
this module.

All solves go through cached symmetric factorizations; explicit matrix
inverses appear only in test oracles.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import NumericalError
from .kernels import KernelSpec, as_points, kernel_cross, kernel_matrix


def _as_query(Xstar, dim: int | None):
    """Split query input into a (n, d) batch plus a scalar-output flag."""
    arr = np.asarray(Xstar, dtype=float)
    single = arr.ndim == 1
    return as_points(arr, dim=dim), single


class GpPosterior:
    """Exact GP posterior over observations ``(X, Y)`` with ridge ``lam``.

    ``Y`` may be ``None`` for a variance-only posterior: the protocol server
    scores uncertainty over reconstructed query locations before it holds
    any reward information, and the variance never involves ``Y``.
    """

    def __init__(self, spec: KernelSpec, X, Y, lam: float):
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.spec = spec
        self.X = as_points(X)
        self.lam = float(lam)
        m = len(self.X)
        if Y is None:
            self.Y = None
        else:
            self.Y = np.asarray(Y, dtype=float).ravel()
            if len(self.Y) != m:
                raise ValueError(f"|X| = {m} but |Y| = {len(self.Y)}")
        if m:
            K = kernel_matrix(spec, self.X)
            try:
                self._factor = cho_factor(K + lam * np.eye(m), lower=True)
            except LinAlgError as exc:
                raise NumericalError(f"posterior factorization failed: {exc}") from exc
            self._alpha = None if self.Y is None else cho_solve(self._factor, self.Y)
        else:
            self._factor = None
            self._alpha = np.zeros(0) if Y is not None else None

    @property
    def m(self) -> int:
        return len(self.X)

    @property
    def dim(self) -> int | None:
        return self.X.shape[1] if self.m else None

    def mean(self, Xstar):
        """Posterior mean at one point (scalar) or a batch (array)."""
        if self.Y is None and self.m:
            raise ValueError("posterior was built without rewards; mean undefined")
        Xq, single = _as_query(Xstar, self.dim)
        if self.m == 0:
            out = np.zeros(len(Xq))
        else:
            out = kernel_cross(self.spec, self.X, Xq).T @ self._alpha
        return float(out[0]) if single else out

    def variance(self, Xstar):
        """Posterior variance, floored at zero; never exceeds k(x, x)."""
        Xq, single = _as_query(Xstar, self.dim)
        prior = self.spec.variance_scale
        if self.m == 0:
            out = np.full(len(Xq), prior)
        else:
            Kx = kernel_cross(self.spec, self.X, Xq)
            out = np.maximum(prior - np.sum(Kx * cho_solve(self._factor, Kx), axis=0), 0.0)
        return float(out[0]) if single else out

    def predict(self, Xstar):
        return self.mean(Xstar), self.variance(Xstar)


def exact_posterior(post: GpPosterior, x) -> tuple[float, float]:
    """(mean, variance) of the exact posterior at a single point."""
    return post.predict(np.asarray(x, dtype=float).ravel())


def gram_inv_sqrt(spec: KernelSpec, S) -> np.ndarray:
    """Symmetric inverse square root of the inducing-set Gram matrix.

    Eigenvalues are floored at ``1e-10 * r * variance_scale`` so duplicated
    inducing points (a legal outcome of Bernoulli subsampling) cannot blow
    up the factorization.
    """
    S = as_points(S)
    r = len(S)
    if r == 0:
        return np.zeros((0, 0))
    K = kernel_matrix(spec, S)
    try:
        w, V = np.linalg.eigh(K)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    w = np.maximum(w, 1e-10 * r * spec.variance_scale)
    return (V / np.sqrt(w)) @ V.T


def nystrom_features(spec: KernelSpec, S, Xstar):
    """Feature map z(x) = K_SS^{-1/2} k_S(x) of the inducing set S.

    Returns an (r,) vector for a single point or (n, r) for a batch; an
    empty inducing set yields zero-length features.
    """
    S = as_points(S)
    Xq, single = _as_query(Xstar, S.shape[1] if len(S) else None)
    if len(S) == 0:
        out = np.zeros((len(Xq), 0))
    else:
        out = (gram_inv_sqrt(spec, S) @ kernel_cross(spec, S, Xq)).T
    return out[0] if single else out


class SparsePosterior:
    """Posterior approximation carried entirely by an inducing set.

    The state is exactly what the protocol ships around: the inducing set
    ``S``, the feature Gram ``Z^T Z``, and either the projected rewards
    ``Z^T Y`` or the precomputed mean weights ``(lam*I + Z^T Z)^{-1} Z^T Y``.
    An empty inducing set is legal and reproduces the prior.
    """

    def __init__(self, spec: KernelSpec, S, lam: float, ztz=None, zty=None,
                 mean_weights=None, inv_sqrt=None):
        if not lam > 0:
            raise ValueError("lam must be positive")
        self.spec = spec
        self.S = as_points(S)
        self.lam = float(lam)
        r = self.r
        self._inv_sqrt = gram_inv_sqrt(spec, self.S) if inv_sqrt is None else inv_sqrt
        if ztz is None:
            if r:
                raise ValueError("ztz is required for a nonempty inducing set")
            ztz = np.zeros((0, 0))
        self.ztz = np.asarray(ztz, dtype=float)
        if self.ztz.shape != (r, r):
            raise ValueError(f"ztz must be {r}x{r}, got {self.ztz.shape}")
        if r:
            try:
                self._factor = cho_factor(self.ztz + lam * np.eye(r), lower=True)
            except LinAlgError as exc:
                raise NumericalError(f"sparse factorization failed: {exc}") from exc
        else:
            self._factor = None
        if mean_weights is not None:
            self.mean_weights = np.asarray(mean_weights, dtype=float).ravel()
        elif zty is not None:
            zty = np.asarray(zty, dtype=float).ravel()
            self.mean_weights = cho_solve(self._factor, zty) if r else np.zeros(0)
        else:
            self.mean_weights = np.zeros(r)
        if len(self.mean_weights) != r:
            raise ValueError("mean weights must have one entry per inducing point")

    @classmethod
    def from_data(cls, spec: KernelSpec, X, Y, S, lam: float) -> "SparsePosterior":
        """Build the approximation from raw observations and an inducing set."""
        X = as_points(X)
        Y = np.asarray(Y, dtype=float).ravel()
        if len(X) != len(Y):
            raise ValueError(f"|X| = {len(X)} but |Y| = {len(Y)}")
        S = as_points(S)
        inv_sqrt = gram_inv_sqrt(spec, S)
        Z = (inv_sqrt @ kernel_cross(spec, S, X)).T if len(S) else np.zeros((len(X), 0))
        ztz = Z.T @ Z
        ztz = 0.5 * (ztz + ztz.T)
        return cls(spec, S, lam, ztz=ztz, zty=Z.T @ Y, inv_sqrt=inv_sqrt)

    @property
    def r(self) -> int:
        return len(self.S)

    def features(self, Xstar):
        Xq, single = _as_query(Xstar, self.S.shape[1] if self.r else None)
        if self.r == 0:
            out = np.zeros((len(Xq), 0))
        else:
            out = (self._inv_sqrt @ kernel_cross(self.spec, self.S, Xq)).T
        return out[0] if single else out

    def mean(self, Xstar):
        Xq, single = _as_query(Xstar, self.S.shape[1] if self.r else None)
        if self.r == 0:
            out = np.zeros(len(Xq))
        else:
            out = self.features(Xq) @ self.mean_weights
        return float(out[0]) if single else out

    def variance(self, Xstar):
        """Approximate posterior variance on the exact-posterior scale."""
        Xq, single = _as_query(Xstar, self.S.shape[1] if self.r else None)
        prior = self.spec.variance_scale
        if self.r == 0:
            out = np.full(len(Xq), prior)
        else:
            Zq = self.features(Xq).T  # (r, n)
            out = np.maximum(
                prior - np.sum(Zq * (self.ztz @ cho_solve(self._factor, Zq)), axis=0),
                0.0,
            )
        return float(out[0]) if single else out

    def predict(self, Xstar):
        return self.mean(Xstar), self.variance(Xstar)


def sparse_posterior(sp: SparsePosterior, x) -> tuple[float, float]:
    """(mean, variance) of the sparse posterior at a single point."""
    return sp.predict(np.asarray(x, dtype=float).ravel())


def confidence_width(B: float, R: float, lam: float, delta: float) -> float:
    """Width multiplier B + R * sqrt((2/lam) * log(2/delta)).

    ``B`` bounds the reward's RKHS norm, ``R`` the sub-Gaussian noise scale;
    with probability at least 1 - delta the reward at a fixed point lies
    within ``width * sigma`` of the posterior mean.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if B < 0 or R < 0:
        raise ValueError("B and R must be nonnegative")
    if not lam > 0:
        raise ValueError("lam must be positive")
    return B + R * math.sqrt((2.0 / lam) * math.log(2.0 / delta))
