"""Nearest-neighbor retrieval quality of binary codes against a Euclidean ground truth.

Ground truth: the distance from each query to its ``k``-th nearest training
point is averaged into one threshold; training points within that threshold
of a query are its neighbors.  Training codes are ranked by Hamming distance
(ties by ascending training index) and scored with average precision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from numba import njit

from .errors import SizeMismatch, TooFewPoints
from .hashing import hamming_matrix

NO_SELF = -1


@njit(cache=True)
def _sq_distances(queries, train, out):
    """Squared Euclidean distances by direct differencing (exact zeros for equal points)."""
    nq, d = queries.shape
    n = train.shape[0]
    for a in range(nq):
        for b in range(n):
            acc = 0.0
            for l in range(d):
                t = queries[a, l] - train[b, l]
                acc += t * t
            out[a, b] = acc


def pairwise_distances(queries: np.ndarray, train: np.ndarray) -> np.ndarray:
    q = np.ascontiguousarray(queries, dtype=np.float64)
    # float32 training data is read as is and promoted per element
    x = train if train.dtype in (np.float32, np.float64) and train.flags.c_contiguous \
        else np.ascontiguousarray(train, dtype=np.float64)
    out = np.empty((q.shape[0], x.shape[0]))
    _sq_distances(q, x, out)
    return np.sqrt(out)


# distance rows kept between the two ground-truth passes up to this many entries
_KEEP_ENTRIES = 1 << 25


@dataclass
class GroundTruth:
    threshold: float
    neighbor_sets: list  # per query, sorted int array of training indices
    kth_distances: np.ndarray
    n_train: int
    self_index: np.ndarray  # per query, training index to ignore or NO_SELF

    @property
    def n_queries(self) -> int:
        return len(self.neighbor_sets)


def build_ground_truth(train, queries, k: int = 50, self_index=None,
                       average_over: str = "queries", chunk: int = 256) -> GroundTruth:
    """Euclidean ground truth from the mean distance to the ``k``-th nearest training point.

    ``self_index[q]`` names a training row that is the query itself (or -1);
    such rows are dropped from both the k-NN search and the neighbor set.
    ``average_over="train"`` averages the k-th NN distance of training points
    (leave-one-out) instead of queries.
    """
    train = np.asarray(train)
    if train.dtype not in (np.float32, np.float64):
        train = train.astype(np.float64)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    n = train.shape[0]
    nq = queries.shape[0]
    if self_index is None:
        self_index = np.full(nq, NO_SELF, dtype=np.int64)
    self_index = np.asarray(self_index, dtype=np.int64)
    if self_index.shape != (nq,):
        raise SizeMismatch(f"self_index has shape {self_index.shape}, expected ({nq},)")
    if k < 1:
        raise ValueError(f"neighbor rank k must be positive, got {k}")
    if n <= k:
        raise TooFewPoints(f"need more than k={k} training points, got {n}")
    if not (np.all(np.isfinite(train)) and np.all(np.isfinite(queries))):
        raise ValueError("ground truth needs finite data")

    def blocks():
        for start in range(0, nq, chunk):
            block = pairwise_distances(queries[start:start + chunk], train)
            for r in range(block.shape[0]):
                s = self_index[start + r]
                if s >= 0:
                    block[r, s] = np.inf
            yield start, block

    # pass 1: k-th distances; pass 2 thresholds the same rows (kept if small, else recomputed)
    keep = nq * n <= _KEEP_ENTRIES
    kept = []
    kth = np.empty(nq)
    for start, block in blocks():
        kth[start:start + block.shape[0]] = np.partition(block, k - 1, axis=1)[:, k - 1]
        if keep:
            kept.append((start, block))

    if average_over == "queries":
        threshold = math.fsum(kth.tolist()) / nq  # order-independent
    elif average_over == "train":
        threshold = float(_train_kth_distances(train, k, chunk).mean())
    else:
        raise ValueError(f"average_over must be 'queries' or 'train', got {average_over!r}")

    sets = []
    for _, block in (kept if keep else blocks()):
        sets.extend(np.flatnonzero(row <= threshold) for row in block)
    return GroundTruth(threshold, sets, kth, n, self_index)


def _train_kth_distances(train: np.ndarray, k: int, chunk: int) -> np.ndarray:
    n = train.shape[0]
    out = np.empty(n)
    for start in range(0, n, chunk):
        block = pairwise_distances(train[start:start + chunk], train)
        for r in range(block.shape[0]):
            block[r, start + r] = np.inf
            out[start + r] = np.partition(block[r], k - 1)[k - 1]
    return out


def average_precision(relevance) -> float:
    """Mean of precision@k over the ranks ``k`` holding a relevant item; 0 if none is relevant.

    Sums are correctly rounded (``math.fsum``) so the value does not depend on
    summation order.
    """
    rel = np.asarray(relevance, dtype=bool)
    n_rel = int(rel.sum())
    if n_rel == 0:
        return 0.0
    hits = np.cumsum(rel)
    ranks = np.flatnonzero(rel) + 1
    return math.fsum((hits[rel] / ranks).tolist()) / n_rel


def rank_by_hamming(distances: np.ndarray) -> np.ndarray:
    """Ascending Hamming order; the stable sort keeps ties in training-index order."""
    return np.argsort(distances, kind="stable")


@dataclass
class EvalReport:
    map: float
    per_query_ap: np.ndarray  # NaN for queries without any true neighbor
    n_queries: int
    code_bits: int
    method: str = ""
    n_excluded: int = 0
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    CSV_FIELDS = ("method", "code_bits", "n_queries", "map")

    def csv_row(self) -> dict:
        return {"method": self.method, "code_bits": self.code_bits,
                "n_queries": self.n_queries, "map": f"{self.map:.6f}"}

    def write_csv(self, path, per_query_path=None) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=self.CSV_FIELDS)
            w.writeheader()
            w.writerow(self.csv_row())
        if per_query_path is not None:
            write_per_query_ap(per_query_path, self.per_query_ap)


def write_per_query_ap(path, aps) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["query", "ap"])
        for q, ap in enumerate(aps):
            w.writerow([q, "" if math.isnan(ap) else f"{ap:.6f}"])


def evaluate(codes_train: np.ndarray, codes_queries: np.ndarray, gt: GroundTruth,
             code_bits: int = 0, method: str = "", chunk: int = 256) -> EvalReport:
    """Hamming-ranked retrieval mAP of packed codes against ``gt``.

    Queries with an empty neighbor set are excluded from the mean and
    counted in ``n_excluded``.
    """
    codes_train = np.atleast_2d(codes_train)
    codes_queries = np.atleast_2d(codes_queries)
    if codes_train.shape[0] != gt.n_train:
        raise SizeMismatch(f"{codes_train.shape[0]} training codes but ground truth covers {gt.n_train}")
    if codes_queries.shape[0] != gt.n_queries:
        raise SizeMismatch(f"{codes_queries.shape[0]} query codes but ground truth has {gt.n_queries}")
    if codes_train.shape[1] != codes_queries.shape[1]:
        raise SizeMismatch("training and query codes have different word counts")

    n = gt.n_train
    # bound the Hamming block to about 16M entries for large training sets
    chunk = max(1, min(chunk, (1 << 24) // max(n, 1)))
    aps = np.full(gt.n_queries, np.nan)
    for start in range(0, gt.n_queries, chunk):
        ham = hamming_matrix(codes_queries[start:start + chunk], codes_train)
        for r in range(ham.shape[0]):
            q = start + r
            neighbors = gt.neighbor_sets[q]
            if neighbors.size == 0:
                continue
            order = rank_by_hamming(ham[r])
            s = gt.self_index[q]
            if s >= 0:
                order = order[order != s]
            relevant = np.zeros(n, dtype=bool)
            relevant[neighbors] = True
            aps[q] = average_precision(relevant[order])
    counted = ~np.isnan(aps)
    m = math.fsum(aps[counted].tolist()) / int(counted.sum()) if counted.any() else 0.0
    return EvalReport(map=m, per_query_ap=aps, n_queries=int(counted.sum()), code_bits=code_bits,
                      method=method, n_excluded=int((~counted).sum()))


def power_of_two_checkpoints(n: int) -> list[int]:
    """1, 2, 4, ... up to ``n``, always ending at ``n``."""
    if n < 1:
        return []
    points = [1 << e for e in range(int(math.log2(n)) + 1)]
    if points[-1] != n:
        points.append(n)
    return points


def log_checkpoints(n: int, count: int = 12) -> list[int]:
    """About ``count`` logarithmically spaced stream positions ending at ``n``."""
    if n < 1:
        return []
    pts = np.unique(np.round(np.geomspace(1, n, count)).astype(int))
    return [int(p) for p in pts]


def stream_map_curve(encoder, train: np.ndarray, queries: np.ndarray, gt: GroundTruth,
                     checkpoints, method: str = "") -> list[tuple[int, EvalReport]]:
    """Stream ``train`` through ``encoder`` once, scoring frozen snapshots at each checkpoint.

    At checkpoint ``t`` the encoder has consumed rows ``0..t-1``; all training
    rows and all queries are then hashed with that state.
    """
    points = sorted(set(int(t) for t in checkpoints if 1 <= t <= len(train)))
    out = []
    seen = 0
    for t in points:
        for x in train[seen:t]:
            encoder.update_and_hash(x)
        seen = t
        report = evaluate(encoder.hash_batch(train), encoder.hash_batch(queries), gt,
                          code_bits=encoder.c, method=method)
        out.append((t, report))
    return out


def split_queries(n: int, n_queries: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Random held-out query indices and the remaining training indices (stream order kept)."""
    if not 0 < n_queries < n:
        raise TooFewPoints(f"need 0 < queries < dataset size, got {n_queries} of {n}")
    rng = np.random.default_rng(seed)
    q = np.sort(rng.choice(n, size=n_queries, replace=False))
    mask = np.ones(n, dtype=bool)
    mask[q] = False
    return q, np.flatnonzero(mask)


def write_curve_csv(path, rows) -> None:
    """Rows of ``(checkpoint_t, EvalReport)``; columns checkpoint_t,method,code_bits,n_queries,map."""
    with open(path, "w", newline="") as fh:
        write_curve(fh, rows)


def write_curve(fh, rows) -> None:
    w = csv.writer(fh)
    w.writerow(["checkpoint_t", "method", "code_bits", "n_queries", "map"])
    for t, rep in rows:
        w.writerow([t, rep.method, rep.code_bits, rep.n_queries, f"{rep.map:.6f}"])
