"""Plane (Givens) rotations that move one diagonal entry of a symmetric matrix to a target value.

Conventions: ``G(i, j)`` is the identity except ``G[j, j] = G[i, i] = c``,
``G[j, i] = -s`` and ``G[i, j] = s``.  Restricted to the ordered pair of
coordinates ``(j, i)`` it is ``[[c, -s], [s, c]]``, so conjugating the
symmetric block ``[[a, b], [b, d]]`` with ``a = S[j, j]`` and ``d = S[i, i]``
gives ``[[a', b'], [b', d']]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit

from .errors import AdmissibilityViolated, DegeneratePlane, IndexOutOfRange

# slack, relative to the block's magnitude, allowed outside the reachable interval
_ADMISSIBILITY_SLACK = 1e-12


@dataclass(frozen=True)
class GivensParams:
    """A plane rotation acting on coordinates ``i`` and ``j``.

    ``j`` is the coordinate whose diagonal entry is driven to the target;
    the two indices may come in either order.
    """

    i: int
    j: int
    c: float
    s: float

    def __post_init__(self):
        if self.i == self.j:
            raise IndexOutOfRange(f"rotation plane needs two distinct indices, got i=j={self.i}")
        if self.i < 0 or self.j < 0:
            raise IndexOutOfRange(f"negative rotation index ({self.i}, {self.j})")

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``n x n`` form, for tests and debugging only."""
        _check_indices(self, n)
        g = np.eye(n)
        g[self.j, self.j] = g[self.i, self.i] = self.c
        g[self.j, self.i] = -self.s
        g[self.i, self.j] = self.s
        return g


@dataclass(frozen=True)
class TwoByTwoProblem:
    """Symmetric block ``[[a, b], [b, d]]`` and the value ``tau`` wanted at ``a``."""

    a: float
    d: float
    b: float
    tau: float

    @property
    def radius(self) -> float:
        return math.hypot(0.5 * (self.a - self.d), self.b)

    def admissible_interval(self) -> tuple[float, float]:
        """Values of ``tau`` reachable by some rotation: ``mid -/+ radius``."""
        mid = 0.5 * (self.a + self.d)
        r = self.radius
        return mid - r, mid + r


class RotationSolution(NamedTuple):
    c: float
    s: float
    a_new: float
    d_new: float
    b_new: float


# status codes returned by the compiled solver
_OK, _INADMISSIBLE, _DEGENERATE = 0, 1, 2


@njit(cache=True)
def solve_kernel(a, d, b, tau):
    """Compiled core of :func:`solve_uniformizing_rotation`.

    Returns ``(status, c, s, a', d', b')``; on a non-zero status the other
    fields are meaningless.
    """
    mid = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = math.hypot(half, b)
    if r == 0.0:
        if abs(a - tau) <= 4.0 * 2.220446049250313e-16 * max(abs(a), abs(tau)):
            return _OK, 1.0, 0.0, a, d, b
        return _DEGENERATE, 1.0, 0.0, a, d, b

    scale = max(abs(a), abs(d), abs(b), abs(tau))
    if not abs(tau - mid) <= r + _ADMISSIBILITY_SLACK * scale:
        return _INADMISSIBLE, 1.0, 0.0, a, d, b
    c1 = half / r
    s1 = b / r
    c2 = (tau - mid) / r
    c2 = min(1.0, max(-1.0, c2))
    # (1 - c2)(1 + c2) keeps precision when |c2| is close to 1
    s2 = math.sqrt((1.0 - c2) * (1.0 + c2))

    cos2 = c1 * c2 - s1 * s2
    sin2 = -(c1 * s2 + c2 * s1)
    if cos2 >= 0.0:
        c = math.sqrt(0.5 * (1.0 + cos2))
        s = sin2 / (2.0 * c)
    else:
        # near theta = +-pi/2 the cosine is tiny; recover it from the sine instead
        s = math.copysign(math.sqrt(0.5 * (1.0 - cos2)), sin2)
        c = sin2 / (2.0 * s)
    norm = math.hypot(c, s)
    return _OK, c / norm, s / norm, tau, a + d - tau, -s2 * r


def solve_uniformizing_rotation(p: TwoByTwoProblem) -> RotationSolution:
    """Cosine/sine of the rotation sending ``a`` to ``tau``, with the rotated block.

    The angle is never formed.  With ``r = hypot((a-d)/2, b)``::

        c1 = (a-d)/2 / r     s1 = b / r
        c2 = (tau - (a+d)/2) / r     s2 = sqrt(1 - c2**2)
        cos(2t) = c1*c2 - s1*s2     sin(2t) = -(c1*s2 + c2*s1)

    and ``(cos t, sin t)`` follow by half-angle formulas with ``cos t >= 0``.
    The rotated block is ``a' = tau``, ``d' = a + d - tau``, ``b' = -s2 * r``.

    Raises AdmissibilityViolated if ``tau`` lies outside
    ``[(a+d)/2 - r, (a+d)/2 + r]`` and DegeneratePlane if ``r == 0`` while
    ``a != tau``.
    """
    a, d, b, tau = float(p.a), float(p.d), float(p.b), float(p.tau)
    if not math.isfinite(a + d + b + tau):
        raise AdmissibilityViolated(f"non-finite 2x2 problem {p!r}")
    status, c, s, a_new, d_new, b_new = solve_kernel(a, d, b, tau)
    if status == _DEGENERATE:
        raise DegeneratePlane(f"block is {a}*I, cannot rotate its diagonal to {tau}")
    if status == _INADMISSIBLE:
        lo, hi = p.admissible_interval()
        raise AdmissibilityViolated(f"tau={tau} outside reachable interval [{lo}, {hi}]")
    return RotationSolution(c, s, a_new, d_new, b_new)


def rotate_block(a: float, d: float, b: float, c: float, s: float) -> tuple[float, float, float]:
    """Explicit ``[[c,-s],[s,c]] [[a,b],[b,d]] [[c,s],[-s,c]]``; returns ``(a', d', b')``."""
    cc, ss, cs = c * c, s * s, c * s
    a_new = cc * a - 2.0 * cs * b + ss * d
    d_new = ss * a + 2.0 * cs * b + cc * d
    b_new = cs * (a - d) + (cc - ss) * b
    return a_new, d_new, b_new


def _check_indices(g: GivensParams, n: int) -> None:
    if g.i >= n or g.j >= n:
        raise IndexOutOfRange(f"rotation ({g.i}, {g.j}) out of range for dimension {n}")


def mix_rows_cols(S: np.ndarray, j: int, i: int, c: float, s: float) -> None:
    """Rows ``(j, i) <- [[c, -s], [s, c]] @ rows``, mirrored into the columns.

    Off-block entries then equal those of ``G S G^T``; the 2x2 block is left
    for the caller to overwrite.
    """
    idx = [j, i]
    rows = np.array([[c, -s], [s, c]]) @ S[idx]
    S[idx] = rows
    S[:, idx] = rows.T


def apply_two_sided(S: np.ndarray, g: GivensParams) -> np.ndarray:
    """In-place ``S <- G S G^T`` touching only rows/columns ``i`` and ``j``.

    The 2x2 block is recomputed explicitly and mirrored so ``S`` stays exactly
    symmetric.
    """
    _check_indices(g, S.shape[0])
    i, j, c, s = g.i, g.j, g.c, g.s
    a, d, b = S[j, j], S[i, i], S[i, j]
    mix_rows_cols(S, j, i, c, s)
    a_new, d_new, b_new = rotate_block(a, d, b, c, s)
    S[j, j] = a_new
    S[i, i] = d_new
    S[j, i] = S[i, j] = b_new
    return S


def apply_right_transpose(R: np.ndarray, g: GivensParams) -> np.ndarray:
    """In-place ``R <- R G^T``; mixes columns ``i`` and ``j`` only."""
    _check_indices(g, R.shape[1])
    idx = [g.j, g.i]
    R[:, idx] = R[:, idx] @ np.array([[g.c, g.s], [-g.s, g.c]])
    return R
