"""Online principal-subspace tracking (OPAST) and the projected covariance it feeds.

``W`` is stored as ``c x d`` with orthonormal rows, so the projection of a
sample is ``y = W @ x``.  One update costs about ``4dc + O(c^2)`` flops and
keeps only ``W`` plus a ``c x c`` matrix ``Z`` (approximate inverse of the
projected correlation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import BadDimensions, NonFiniteInput

DEFAULT_REORTHO_EVERY = 10_000


@dataclass
class OpastState:
    W: np.ndarray
    Z: np.ndarray
    beta: float = 1.0
    n_updates: int = 0
    reortho_every: int = DEFAULT_REORTHO_EVERY

    @property
    def c(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def copy(self) -> "OpastState":
        return OpastState(self.W.copy(), self.Z.copy(), self.beta, self.n_updates, self.reortho_every)

    def orthonormality_error(self) -> float:
        return float(np.max(np.abs(self.W @ self.W.T - np.eye(self.c))))


def opast_init(d: int, c: int, seed: int = 0, beta: float = 1.0,
               reortho_every: int = DEFAULT_REORTHO_EVERY) -> OpastState:
    """Start from the first ``c`` rows of a seeded random orthogonal basis of ``R^d``; ``Z = I``."""
    if c < 1 or c >= d:
        raise BadDimensions(f"need 1 <= c < d, got c={c}, d={d}")
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"forgetting factor must lie in (0, 1], got {beta}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((d, c)))
    q *= np.sign(np.diag(r))
    return OpastState(W=np.ascontiguousarray(q.T), Z=np.eye(c), beta=float(beta),
                      reortho_every=reortho_every)


def reorthonormalize(W: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt on the rows of ``W``, in place."""
    for k in range(W.shape[0]):
        for m in range(k):
            W[k] -= (W[m] @ W[k]) * W[m]
        W[k] /= np.linalg.norm(W[k])
    return W


@njit(cache=True)
def _opast_step(W, Z, x, beta, y):
    """One OPAST recursion on ``W`` (c x d, rows) and ``Z`` in place; fills ``y = W_old x``."""
    c, d = W.shape
    for k in range(c):
        acc = 0.0
        for l in range(d):
            acc += W[k, l] * x[l]
        y[k] = acc

    q = np.empty(c)
    for k in range(c):
        acc = 0.0
        for m in range(c):
            acc += Z[k, m] * y[m]
        q[k] = acc / beta
    yq = 0.0
    qq = 0.0
    for k in range(c):
        yq += y[k] * q[k]
        qq += q[k] * q[k]
    gamma = 1.0 / (1.0 + yq)

    inv_beta = 1.0 / beta
    for k in range(c):
        for m in range(k, c):
            v = Z[k, m] * inv_beta - gamma * q[k] * q[m]
            Z[k, m] = v
            Z[m, k] = v

    # W^T y and W^T q in one row-contiguous sweep over W
    wy = np.zeros(d)
    wq = np.zeros(d)
    for k in range(c):
        yk = y[k]
        qk = q[k]
        for l in range(d):
            w = W[k, l]
            wy[l] += w * yk
            wq[l] += w * qk
    p = np.empty(d)
    pp = 0.0
    for l in range(d):
        pl = gamma * (x[l] - wy[l])
        p[l] = pl
        pp += pl * pl

    if qq > 0.0 and pp > 0.0:
        root = math.sqrt(1.0 + pp * qq)
        # (1/sqrt(1 + |p|^2 |q|^2) - 1) / |q|^2 without cancellation
        tau0 = -pp / (root * (1.0 + root))
        scale = 1.0 + tau0 * qq
        for l in range(d):
            p[l] = tau0 * wq[l] + scale * p[l]
        for k in range(c):
            qk = q[k]
            for l in range(d):
                W[k, l] += qk * p[l]


def opast_update(state: OpastState, x: np.ndarray) -> np.ndarray:
    """Consume one centered sample; return its projection on the *previous* ``W``.

    Recursion (rows form of OPAST)::

        y = W x;  q = Z y / beta;  gamma = 1 / (1 + y.q)
        p = gamma (x - W^T y)
        Z <- Z / beta - gamma q q^T
        tau0 = (1/|q|^2) (1/sqrt(1 + |p|^2 |q|^2) - 1)
        p' = tau0 W^T q + (1 + tau0 |q|^2) p
        W <- W + q p'^T
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.d,):
        raise BadDimensions(f"expected a vector of length {state.d}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise NonFiniteInput("sample contains NaN or inf")
    y = np.empty(state.c)
    _opast_step(state.W, state.Z, x, state.beta, y)
    state.n_updates += 1
    if state.reortho_every and state.n_updates % state.reortho_every == 0:
        reorthonormalize(state.W)
    return y


@dataclass
class ProjectedCovariance:
    """Exponentially weighted ``sum_t beta^(n-t) y_t y_t^T`` of projected samples."""

    sigma_v: np.ndarray
    weight: float = 0.0

    @classmethod
    def zeros(cls, c: int) -> "ProjectedCovariance":
        return cls(np.zeros((c, c)))

    @property
    def tau(self) -> float:
        return float(np.trace(self.sigma_v)) / self.sigma_v.shape[0]

    def copy(self) -> "ProjectedCovariance":
        return ProjectedCovariance(self.sigma_v.copy(), self.weight)


def projected_cov_update(cov: ProjectedCovariance, y: np.ndarray, beta: float = 1.0) -> ProjectedCovariance:
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("projection contains NaN or inf")
    if beta != 1.0:
        cov.sigma_v *= beta
    # outer(y, y) is exactly symmetric, so sigma_v stays exactly symmetric
    cov.sigma_v += np.outer(y, y)
    cov.weight = beta * cov.weight + 1.0
    return cov
