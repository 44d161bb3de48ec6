"""Streaming encoder ``b_t = sign(R W (x_t - mu))`` and packed binary codes.

Bit layout: component ``k`` of the sign vector is bit ``k % 64`` of word
``k // 64``; ``+1`` is a set bit, ``-1`` a clear bit, and ``sign(0) = +1``.
"""

from __future__ import annotations

import copy
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .baselines import RotationStrategy
from .errors import (
    BadSignValue,
    CodeFileError,
    DimensionMismatch,
    EmptyEncoder,
    LengthMismatch,
    NonFiniteInput,
)
from .subspace import (
    DEFAULT_REORTHO_EVERY,
    OpastState,
    ProjectedCovariance,
    _opast_step,
    opast_init,
    reorthonormalize,
)

WORD_BITS = 64


def n_words(c: int) -> int:
    return (c + WORD_BITS - 1) // WORD_BITS


@dataclass(frozen=True)
class BinaryCode:
    words: np.ndarray  # uint64, bits past `length` are zero
    length: int

    def __eq__(self, other):
        if not isinstance(other, BinaryCode):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.length, self.words.tobytes()))

    def to_signs(self) -> np.ndarray:
        return unpack_bits(self)


def pack_bool_rows(bits: np.ndarray) -> np.ndarray:
    """Pack an ``(n, c)`` boolean array (True = +1) into ``(n, n_words(c))`` uint64 words."""
    bits = np.atleast_2d(np.asarray(bits, dtype=bool))
    n, c = bits.shape
    w = n_words(c)
    padded = np.zeros((n, w * WORD_BITS), dtype=bool)
    padded[:, :c] = bits
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view("<u8").astype(np.uint64, copy=False).reshape(n, w)


def unpack_words(words: np.ndarray, c: int) -> np.ndarray:
    """Inverse of :func:`pack_bool_rows`; returns an ``(n, c)`` boolean array."""
    words = np.ascontiguousarray(np.atleast_2d(words), dtype="<u8")
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return bits[:, :c].astype(bool)


def pack_bits(signs) -> BinaryCode:
    signs = np.asarray(signs)
    if signs.ndim != 1 or signs.size == 0:
        raise BadSignValue(f"expected a non-empty 1-D sign vector, got shape {signs.shape}")
    if not np.all((signs == 1) | (signs == -1)):
        raise BadSignValue("sign vector entries must be +1 or -1")
    return BinaryCode(pack_bool_rows(signs > 0)[0], signs.size)


def unpack_bits(code: BinaryCode) -> np.ndarray:
    bits = unpack_words(code.words, code.length)[0]
    return np.where(bits, 1, -1).astype(np.int8)


def hamming_distance(a: BinaryCode, b: BinaryCode) -> int:
    if a.length != b.length:
        raise LengthMismatch(f"code lengths differ: {a.length} vs {b.length}")
    return int(np.bitwise_count(a.words ^ b.words).sum())


def hamming_matrix(queries: np.ndarray, base: np.ndarray) -> np.ndarray:
    """All pairwise Hamming distances between packed code arrays, shape ``(nq, nb)``."""
    queries = np.atleast_2d(queries)
    base = np.atleast_2d(base)
    if queries.shape[1] != base.shape[1]:
        raise LengthMismatch(f"word counts differ: {queries.shape[1]} vs {base.shape[1]}")
    out = np.zeros((queries.shape[0], base.shape[0]), dtype=np.int32)
    for k in range(queries.shape[1]):
        out += np.bitwise_count(queries[:, k, None] ^ base[None, :, k])
    return out


def signs_to_code(z: np.ndarray) -> BinaryCode:
    # z >= 0 is True for -0.0 as well, which is the sign(0) = +1 rule
    return BinaryCode(pack_bool_rows(z >= 0)[0], z.shape[-1])


@njit(cache=True)
def _encode_step(x, mean, count, W, Z, beta, sigma_v, R, words):
    """Fused per-sample path: center, track, hash with the old rotation, update statistics.

    Returns False (state untouched) if ``x`` is not finite.
    """
    d = x.shape[0]
    c = W.shape[0]
    for l in range(d):
        if not math.isfinite(x[l]):
            return False
    if count == 0:
        mean[:] = x
    centered = x - mean
    y = np.empty(c)
    _opast_step(W, Z, centered, beta, y)

    for k in range(c):
        z = 0.0
        for m in range(c):
            z += R[k, m] * y[m]
        # z >= 0 holds for -0.0 too: sign(0) = +1
        if z >= 0.0:
            words[k >> 6] |= np.uint64(1) << np.uint64(k & 63)

    inv_n = 1.0 / (count + 1)
    for l in range(d):
        mean[l] += centered[l] * inv_n
    for k in range(c):
        for m in range(c):
            sigma_v[k, m] = beta * sigma_v[k, m] + y[k] * y[m]
    return True


@dataclass
class RefreshPolicy:
    """Recompute the rotation after every sample up to ``warmup``, then every ``every`` samples."""

    warmup: int = 1000
    every: int = 10

    def due(self, count: int) -> bool:
        return count <= self.warmup or (self.every > 0 and count % self.every == 0)


@dataclass
class StreamingEncoder:
    d: int
    c: int
    strategy: RotationStrategy = field(default_factory=RotationStrategy)
    beta: float = 1.0
    tol: float | None = None
    refresh: RefreshPolicy = field(default_factory=RefreshPolicy)
    seed: int = 0
    reortho_every: int = DEFAULT_REORTHO_EVERY

    def __post_init__(self):
        self.opast: OpastState = opast_init(self.d, self.c, self.seed, self.beta, self.reortho_every)
        self.cov = ProjectedCovariance.zeros(self.c)
        self.mean = np.zeros(self.d)
        self.count = 0
        self.rotation = self.strategy.initial(self.c)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"expected a vector of length {self.d}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise NonFiniteInput("sample contains NaN or inf")
        return x

    def update_and_hash(self, x) -> BinaryCode:
        """Emit the code of ``x`` under the current state, then learn from ``x``."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d,):
            raise DimensionMismatch(f"expected a vector of length {self.d}, got shape {x.shape}")
        words = np.zeros(n_words(self.c), dtype=np.uint64)
        ok = _encode_step(x, self.mean, self.count, self.opast.W, self.opast.Z, self.beta,
                          self.cov.sigma_v, self.rotation, words)
        if not ok:
            raise NonFiniteInput("sample contains NaN or inf")

        self.count += 1
        self.cov.weight = self.beta * self.cov.weight + 1.0
        op = self.opast
        op.n_updates += 1
        if op.reortho_every and op.n_updates % op.reortho_every == 0:
            reorthonormalize(op.W)
        if self.strategy.adaptive and self.refresh.due(self.count):
            self.refresh_rotation()
        return BinaryCode(words, self.c)

    def refresh_rotation(self) -> np.ndarray:
        self.rotation = self.strategy.rotation(self.cov.sigma_v, self.tol)
        return self.rotation

    def fit_stream(self, xs) -> "StreamingEncoder":
        for x in xs:
            self.update_and_hash(x)
        return self

    def projection(self) -> np.ndarray:
        """The combined ``c x d`` hashing matrix ``R W``."""
        return self.rotation @ self.opast.W

    def hash_only(self, x) -> BinaryCode:
        if self.count == 0:
            raise EmptyEncoder("encoder has not seen any sample yet")
        x = self._check(x)
        return signs_to_code(self.rotation @ (self.opast.W @ (x - self.mean)))

    def hash_batch(self, X, chunk: int = 8192) -> np.ndarray:
        """Packed codes ``(n, n_words(c))`` for the rows of ``X``; state is not touched."""
        if self.count == 0:
            raise EmptyEncoder("encoder has not seen any sample yet")
        X = np.atleast_2d(np.asarray(X))
        if X.shape[1] != self.d:
            raise DimensionMismatch(f"expected {self.d} columns, got {X.shape[1]}")
        Wt, Rt = self.opast.W.T, self.rotation.T
        out = np.empty((X.shape[0], n_words(self.c)), dtype=np.uint64)
        for start in range(0, X.shape[0], chunk):
            block = X[start:start + chunk].astype(np.float64) - self.mean
            out[start:start + chunk] = pack_bool_rows((block @ Wt) @ Rt >= 0)
        return out

    def snapshot(self) -> "StreamingEncoder":
        return copy.deepcopy(self)

    def state_nbytes(self) -> int:
        arrays = (self.mean, self.opast.W, self.opast.Z, self.cov.sigma_v, self.rotation)
        return sum(a.nbytes for a in arrays)


# -- code files ---------------------------------------------------------------

MAGIC = b"UDSK"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")


class CodeFileWriter:
    """Streams packed codes to disk; the sample count in the header is patched on close."""

    def __init__(self, path, c: int):
        self.path = Path(path)
        self.c = c
        self.count = 0
        self._fh = open(self.path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, c, 0))

    def write(self, code: BinaryCode) -> None:
        if code.length != self.c:
            raise LengthMismatch(f"code length {code.length} != file code length {self.c}")
        self._fh.write(np.asarray(code.words, dtype="<u8").tobytes())
        self.count += 1

    def write_words(self, words: np.ndarray) -> None:
        words = np.atleast_2d(words)
        if words.shape[1] != n_words(self.c):
            raise LengthMismatch(f"expected {n_words(self.c)} words per code, got {words.shape[1]}")
        self._fh.write(np.ascontiguousarray(words, dtype="<u8").tobytes())
        self.count += words.shape[0]

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.seek(0)
        self._fh.write(_HEADER.pack(MAGIC, VERSION, self.c, self.count))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_codes(path, words: np.ndarray, c: int) -> None:
    with CodeFileWriter(path, c) as w:
        w.write_words(words)


def read_codes(path) -> tuple[int, np.ndarray]:
    """Return ``(c, words)`` with ``words`` of shape ``(count, n_words(c))``."""
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise CodeFileError("file shorter than header")
    magic, version, c, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CodeFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CodeFileError(f"unsupported code file version {version}")
    w = n_words(c)
    body = data[_HEADER.size:]
    if len(body) != count * w * 8:
        raise CodeFileError(f"expected {count * w * 8} payload bytes, found {len(body)}")
    words = np.frombuffer(body, dtype="<u8").astype(np.uint64).reshape(count, w)
    return c, words
