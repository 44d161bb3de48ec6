"""Rotation strategies applied on top of the tracked subspace.

``unifdiag``  balances the projected variances (the method of this package).
``randrot``   a constant Haar-random rotation drawn once at construction.
``identity``  no balancing: one bit per principal axis.  The tracker returns
              an arbitrary orthonormal basis of the subspace, so the principal
              axes are recovered from the eigenvectors of the projected
              covariance (descending eigenvalue order).
``raw``       literally ``R = I`` on whatever basis the tracker holds.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .unifdiag import uniformize_diagonal

KINDS = ("unifdiag", "randrot", "identity", "raw")


def random_orthogonal(c: int, seed: int | None = 0) -> np.ndarray:
    """Haar-distributed ``c x c`` orthogonal matrix from a sign-fixed QR of a Gaussian matrix."""
    if c < 1:
        raise ValueError(f"dimension must be positive, got {c}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((c, c)))
    # without the sign fix QR output is not Haar distributed
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    return q * signs


def principal_axes(sigma_v: np.ndarray) -> np.ndarray:
    """Rows are eigenvectors of ``sigma_v`` sorted by decreasing eigenvalue."""
    _, vecs = np.linalg.eigh(sigma_v)
    return np.ascontiguousarray(vecs[:, ::-1].T)


@dataclass
class RotationStrategy:
    kind: str = "unifdiag"
    seed: int = 0
    _fixed: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown rotation strategy {self.kind!r}; expected one of {KINDS}")

    @property
    def adaptive(self) -> bool:
        """Whether the rotation depends on the projected covariance."""
        return self.kind in ("unifdiag", "identity")

    def initial(self, c: int) -> np.ndarray:
        if self.kind == "randrot":
            if self._fixed is None or self._fixed.shape[0] != c:
                self._fixed = random_orthogonal(c, self.seed)
            return self._fixed.copy()
        return np.eye(c)

    def rotation(self, sigma_v: np.ndarray, tol: float | None = None) -> np.ndarray:
        c = sigma_v.shape[0]
        if self.kind == "unifdiag":
            return uniformize_diagonal(sigma_v, tol).R
        if self.kind == "identity":
            return principal_axes(sigma_v)
        return self.initial(c)

    @property
    def label(self) -> str:
        return self.kind
