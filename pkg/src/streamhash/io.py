"""Vector streams: fvecs and CSV readers/writers, plus a seeded synthetic generator.

fvecs record layout (little-endian): ``int32 d`` followed by ``d`` float32 values.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import BadSpec, InconsistentDimension, NegativeDimension, TruncatedRecord

_DIM = struct.Struct("<i")


class VectorStream:
    """Re-iterable stream of float64 vectors sharing one dimension.

    ``factory`` returns a fresh iterator on each pass; ``dim`` may be ``None``
    until the first record has been read.
    """

    def __init__(self, factory, dim: int | None = None, length: int | None = None, source: str = ""):
        self._factory = factory
        self.dim = dim
        self.length = length
        self.source = source

    def __iter__(self) -> Iterator[np.ndarray]:
        for x in self._factory():
            if self.dim is None:
                self.dim = x.shape[0]
            yield x

    def __len__(self):
        if self.length is None:
            raise TypeError(f"length of stream {self.source!r} is unknown")
        return self.length

    def take(self, n: int | None = None) -> np.ndarray:
        """Materialize up to ``n`` vectors (all if ``None``) as an ``(n, d)`` array."""
        rows = []
        for k, x in enumerate(self):
            if n is not None and k >= n:
                break
            rows.append(x)
        if not rows:
            return np.zeros((0, self.dim or 0))
        return np.vstack(rows)


def _iter_fvecs(path: Path) -> Iterator[np.ndarray]:
    dim = None
    with open(path, "rb") as fh:
        while True:
            head = fh.read(4)
            if not head:
                return
            if len(head) < 4:
                raise TruncatedRecord(f"{path}: partial dimension header")
            (d,) = _DIM.unpack(head)
            if d < 0:
                raise NegativeDimension(f"{path}: negative dimension {d}")
            if dim is None:
                dim = d
            elif d != dim:
                raise InconsistentDimension(f"{path}: record of dimension {d}, expected {dim}")
            body = fh.read(4 * d)
            if len(body) < 4 * d:
                raise TruncatedRecord(f"{path}: record needs {4 * d} bytes, found {len(body)}")
            yield np.frombuffer(body, dtype="<f4").astype(np.float64)


def _peek_fvecs_dim(path: Path) -> int | None:
    with open(path, "rb") as fh:
        head = fh.read(4)
    if len(head) < 4:
        return None
    return _DIM.unpack(head)[0]


def read_fvecs(path) -> VectorStream:
    path = Path(path)
    dim = _peek_fvecs_dim(path)
    length = None
    if dim is not None and dim > 0:
        size = path.stat().st_size
        if size % (4 + 4 * dim) == 0:
            length = size // (4 + 4 * dim)
    elif dim is None:
        length = 0
    return VectorStream(lambda: _iter_fvecs(path), dim=dim, length=length, source=str(path))


def load_fvecs(path) -> np.ndarray:
    """Whole file as an ``(n, d)`` float32 array (for evaluation, which needs random access)."""
    path = Path(path)
    raw = path.read_bytes()
    if not raw:
        return np.zeros((0, 0), dtype=np.float32)
    (d,) = _DIM.unpack_from(raw)
    if d <= 0:
        raise NegativeDimension(f"{path}: bad dimension {d}")
    rec = 4 + 4 * d
    if len(raw) % rec:
        raise TruncatedRecord(f"{path}: size {len(raw)} is not a multiple of record size {rec}")
    arr = np.frombuffer(raw, dtype="<i4").reshape(-1, d + 1)
    if np.any(arr[:, 0] != d):
        raise InconsistentDimension(f"{path}: records of differing dimension")
    return arr[:, 1:].view("<f4").astype(np.float32)


def write_fvecs(path, vectors: Iterable) -> int:
    """Write vectors as float32 fvecs records; returns the number written."""
    n = 0
    dim = None
    with open(path, "wb") as fh:
        for v in vectors:
            v = np.asarray(v, dtype="<f4").ravel()
            if v.size == 0:
                raise NegativeDimension("cannot write a zero-dimensional vector")
            if dim is None:
                dim = v.size
            elif v.size != dim:
                raise InconsistentDimension(f"vector of dimension {v.size}, expected {dim}")
            fh.write(_DIM.pack(v.size))
            fh.write(v.tobytes())
            n += 1
    return n


def _iter_csv(path: Path) -> Iterator[np.ndarray]:
    dim = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not cell.strip() for cell in row):
                continue
            x = np.array([float(cell) for cell in row])
            if dim is None:
                dim = x.size
            elif x.size != dim:
                raise InconsistentDimension(f"{path}:{lineno}: {x.size} columns, expected {dim}")
            yield x


def read_csv(path) -> VectorStream:
    """Headerless comma-separated float rows."""
    path = Path(path)
    return VectorStream(lambda: _iter_csv(path), source=str(path))


def write_csv(path, vectors: Iterable) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for v in vectors:
            w.writerow([repr(float(t)) for t in np.asarray(v).ravel()])


def open_vectors(path) -> VectorStream:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_csv(path)
    return read_fvecs(path)


@dataclass(frozen=True)
class SyntheticSpec:
    """Gaussian mixture living in a random rank-``rank`` subspace of ``R^d``, plus isotropic noise.

    The latent covariance is ``diag(scale * decay**k)`` for ``k < rank``.  With
    ``n_clusters > 1`` a fraction ``cluster_share`` of that variance goes to the
    spread of cluster centers and the rest to within-cluster scatter.
    """

    d: int
    rank: int
    n: int
    decay: float = 0.5
    noise: float = 0.0
    seed: int = 0
    n_clusters: int = 1
    scale: float = 1.0
    cluster_share: float = 0.8

    def validate(self) -> None:
        if self.d < 1 or not 1 <= self.rank <= self.d:
            raise BadSpec(f"need 1 <= rank <= d, got rank={self.rank}, d={self.d}")
        if not 0.0 < self.decay <= 1.0:
            raise BadSpec(f"decay must lie in (0, 1], got {self.decay}")
        if self.n < 0 or self.n_clusters < 1 or self.noise < 0 or self.scale <= 0:
            raise BadSpec(f"invalid synthetic spec {self}")
        if self.n_clusters > 1 and not 0.0 <= self.cluster_share <= 1.0:
            raise BadSpec(f"cluster_share must lie in [0, 1], got {self.cluster_share}")

    @property
    def profile(self) -> np.ndarray:
        return self.scale * self.decay ** np.arange(self.rank)


class SyntheticSource:
    """Materialized parameters of a :class:`SyntheticSpec` (basis, centers) and its sampler."""

    def __init__(self, spec: SyntheticSpec):
        spec.validate()
        self.spec = spec
        rng = np.random.default_rng([spec.seed, 0])
        basis, r = np.linalg.qr(rng.standard_normal((spec.d, spec.rank)))
        self.basis = basis * np.sign(np.diag(r))
        prof = spec.profile
        if spec.n_clusters > 1:
            between = spec.cluster_share * prof
            self.within = (1.0 - spec.cluster_share) * prof
            self.centers = rng.standard_normal((spec.n_clusters, spec.rank)) * np.sqrt(between)
        else:
            self.within = prof
            self.centers = np.zeros((1, spec.rank))

    def population_covariance(self) -> np.ndarray:
        """Exact covariance of the mixture (equal cluster weights) given the drawn centers."""
        spec = self.spec
        mu = self.centers.mean(axis=0)
        dc = self.centers - mu
        latent = np.diag(self.within) + dc.T @ dc / self.centers.shape[0]
        return self.basis @ latent @ self.basis.T + spec.noise ** 2 * np.eye(spec.d)

    def population_mean(self) -> np.ndarray:
        return self.basis @ self.centers.mean(axis=0)

    def sample(self, n: int | None = None, chunk: int = 512) -> Iterator[np.ndarray]:
        """Yield blocks of at most ``chunk`` rows.

        Labels, latent draws and noise come from separate generators consumed
        in stream order, so the random draws do not depend on ``chunk``; the
        rows agree across chunk sizes up to matrix-product rounding.
        """
        spec = self.spec
        n = spec.n if n is None else n
        rng_label, rng_latent, rng_noise = (np.random.default_rng(s)
                                            for s in np.random.SeedSequence([spec.seed, 1]).spawn(3))
        sd = np.sqrt(self.within)
        done = 0
        while done < n:
            m = min(chunk, n - done)
            labels = np.minimum((rng_label.random(m) * spec.n_clusters).astype(np.int64), spec.n_clusters - 1)
            latent = self.centers[labels] + rng_latent.standard_normal((m, spec.rank)) * sd
            block = latent @ self.basis.T
            if spec.noise > 0:
                block += spec.noise * rng_noise.standard_normal((m, spec.d))
            yield block
            done += m

    def array(self, n: int | None = None) -> np.ndarray:
        blocks = list(self.sample(n))
        return np.vstack(blocks) if blocks else np.zeros((0, self.spec.d))


def generate_synthetic(spec: SyntheticSpec) -> VectorStream:
    src = SyntheticSource(spec)

    def rows():
        for block in src.sample():
            yield from block

    return VectorStream(rows, dim=spec.d, length=spec.n, source=f"synthetic:{spec}")
