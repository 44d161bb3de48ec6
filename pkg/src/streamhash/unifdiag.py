"""Diagonal uniformization: rotate a symmetric matrix so every diagonal entry equals trace/c.

At most ``c - 1`` plane rotations are used.  Each one pairs an index whose
diagonal entry is below the target with one above it, sets the lower one to
the target exactly and re-files the other according to its new value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import NonFiniteEntry, NotSymmetric
from .givens import GivensParams, solve_kernel

SYMMETRY_TOL = 1e-9


def default_tol(tau: float) -> float:
    return 1e-8 * max(abs(tau), 1.0)


@dataclass
class IndexPartition:
    """Indices whose diagonal entry sits below (``inf``) or above (``sup``) the tolerance band."""

    inf: np.ndarray
    sup: np.ndarray

    @classmethod
    def from_diagonal(cls, diag: np.ndarray, tau: float, tol: float) -> "IndexPartition":
        return cls(np.flatnonzero(diag < tau - tol), np.flatnonzero(diag > tau + tol))



@dataclass
class UniformizationResult:
    R: np.ndarray
    rotated: np.ndarray
    rotations_used: int
    residual: float
    tau: float
    tol: float
    rotation_planes: np.ndarray  # (rotations_used, 2) rows of (i, j)
    rotation_cs: np.ndarray  # (rotations_used, 2) rows of (cos, sin)

    @property
    def rotations(self) -> list[GivensParams]:
        return [GivensParams(int(i), int(j), float(c), float(s))
                for (i, j), (c, s) in zip(self.rotation_planes, self.rotation_cs)]


def _validate(S: np.ndarray) -> np.ndarray:
    S = np.asarray(S, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] or S.shape[0] < 1:
        raise NotSymmetric(f"expected a non-empty square matrix, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise NonFiniteEntry("matrix contains NaN or inf")
    scale = max(1.0, float(np.max(np.abs(S))))
    if np.max(np.abs(S - S.T)) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric")
    return S


@njit(cache=True)
def _uniformize_kernel(work, acc, inf0, sup0, tau, tol, rot_idx, rot_cs):
    """Rotation loop on ``work`` (in place); ``acc`` accumulates ``acc <- acc G^T``.

    Index lists are FIFO queues: pop from the front, re-file at the back.
    Returns ``(rotations_used, status)`` with a non-zero status only if the
    2x2 solver rejects a pair, which the band test rules out.
    """
    c = work.shape[0]
    inf_q = np.empty(2 * c, dtype=np.int64)
    sup_q = np.empty(2 * c, dtype=np.int64)
    inf_head, inf_tail = 0, inf0.shape[0]
    sup_head, sup_tail = 0, sup0.shape[0]
    inf_q[:inf_tail] = inf0
    sup_q[:sup_tail] = sup0

    it = 0
    while it < c - 1 and inf_head < inf_tail and sup_head < sup_tail:
        j = inf_q[inf_head]
        inf_head += 1
        i = sup_q[sup_head]
        sup_head += 1
        a = work[j, j]
        b = work[i, j]
        d = work[i, i]
        status, cs, sn, a_new, d_new, b_new = solve_kernel(a, d, b, tau)
        if status != 0:
            return it, status
        rot_idx[it, 0] = i
        rot_idx[it, 1] = j
        rot_cs[it, 0] = cs
        rot_cs[it, 1] = sn
        it += 1

        for k in range(c):
            rj = work[j, k]
            ri = work[i, k]
            work[j, k] = cs * rj - sn * ri
            work[i, k] = sn * rj + cs * ri
        for k in range(c):
            work[k, j] = work[j, k]
            work[k, i] = work[i, k]
        work[j, j] = a_new
        work[i, i] = d_new
        work[j, i] = b_new
        work[i, j] = b_new

        for k in range(c):
            cj = acc[k, j]
            ci = acc[k, i]
            acc[k, j] = cs * cj - sn * ci
            acc[k, i] = sn * cj + cs * ci

        # filed on d' itself (not the midpoint) so a retired entry stays within tol of tau
        if d_new < tau - tol:
            inf_q[inf_tail] = i
            inf_tail += 1
        elif d_new > tau + tol:
            sup_q[sup_tail] = i
            sup_tail += 1
    return it, 0


def uniformize_diagonal(S: np.ndarray, tol: float | None = None) -> UniformizationResult:
    """Find an orthogonal ``R`` such that ``R @ S @ R.T`` has a constant diagonal.

    ``S`` is left untouched; the rotated copy is returned in ``result.rotated``.
    Diagonal entries already within ``tol`` of the target are never touched.
    At most ``c - 1`` rotations are applied; if the loop stops with entries
    still outside the band, ``result.residual`` reports the worst deviation.
    """
    S = _validate(S)
    c = S.shape[0]
    work = np.array(S, dtype=np.float64, order="C")
    tau = float(np.trace(work)) / c
    if tol is None:
        tol = default_tol(tau)
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    parts = IndexPartition.from_diagonal(np.diag(work), tau, tol)
    # acc holds R^T: rotations are applied on the right as in the Jacobi sweep,
    # so work == acc.T @ S @ acc
    acc = np.eye(c)
    rot_idx = np.zeros((max(c - 1, 0), 2), dtype=np.int64)
    rot_cs = np.zeros((max(c - 1, 0), 2))
    it, status = _uniformize_kernel(
        work, acc,
        parts.inf.astype(np.int64), parts.sup.astype(np.int64),
        tau, tol, rot_idx, rot_cs,
    )
    if status != 0:
        raise RuntimeError(f"2x2 solver rejected a paired index at rotation {it + 1}")

    residual = float(np.max(np.abs(np.diag(work) - tau)))
    return UniformizationResult(
        R=np.ascontiguousarray(acc.T),
        rotated=work,
        rotations_used=int(it),
        residual=residual,
        tau=tau,
        tol=tol,
        rotation_planes=rot_idx[:it],
        rotation_cs=rot_cs[:it],
    )


def refresh_rotation(cov, tol: float | None = None) -> np.ndarray:
    """Uniformizing rotation for a projected covariance; ``cov`` is not modified."""
    return uniformize_diagonal(cov.sigma_v, tol).R
