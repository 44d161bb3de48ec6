"""Reference implementations used only by the tests.

Each one is written from the defining formula, deliberately without sharing
code with the package, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np

mpmath.mp.dps = 50


def similarity_2x2(a, d, b, c, s):
    """``G [[a, b], [b, d]] G^T`` with ``G = [[c, -s], [s, c]]`` by dense matrix products."""
    G = np.array([[c, -s], [s, c]], dtype=np.float64)
    M = np.array([[a, b], [b, d]], dtype=np.float64)
    out = G @ M @ G.T
    return out[0, 0], out[1, 1], out[0, 1]


def uniformizing_angle_mp(a, d, b, tau):
    """Angle ``t`` with ``a'(t) = tau`` and ``b'(t) <= 0``, solved in 50-digit arithmetic.

    ``a'(t) = m + h cos 2t - b sin 2t`` with ``m = (a+d)/2, h = (a-d)/2``;
    writing ``h = r cos p, b = r sin p`` gives ``cos(2t + p) = (tau - m) / r``.
    Both roots are tried and the one with non-positive off-diagonal is kept.
    """
    a, d, b, tau = (mpmath.mpf(v) for v in (a, d, b, tau))
    m, h = (a + d) / 2, (a - d) / 2
    r = mpmath.sqrt(h * h + b * b)
    p = mpmath.atan2(b, h)
    base = mpmath.acos((tau - m) / r)
    for two_t in (base - p, -base - p):
        t = two_t / 2
        c, s = mpmath.cos(t), mpmath.sin(t)
        a_new = c * c * a - 2 * c * s * b + s * s * d
        d_new = s * s * a + 2 * c * s * b + c * c * d
        b_new = c * s * (a - d) + (c * c - s * s) * b
        if b_new <= mpmath.mpf("1e-40"):
            if c < 0:
                c, s = -c, -s
            return [float(v) for v in (c, s, a_new, d_new, b_new)]
    raise AssertionError("no root with non-positive off-diagonal")


def hamming_naive(a_bits, b_bits) -> int:
    return sum(1 for x, y in zip(a_bits, b_bits) if x != y)


def exact_sign_code(R, W, x, mean):
    """Signs of ``R W (x - mean)`` in exact rational arithmetic (``sign(0) = +1``)."""
    cen = [Fraction(float(v)) - Fraction(float(m)) for v, m in zip(x, mean)]
    y = [sum(Fraction(float(w)) * v for w, v in zip(row, cen)) for row in W]
    z = [sum(Fraction(float(r)) * v for r, v in zip(row, y)) for row in R]
    return [1 if v >= 0 else -1 for v in z]


def brute_force_ground_truth(train, queries, k):
    """Threshold = mean over queries of the k-th smallest distance; neighbor = distance <= threshold."""
    train = np.asarray(train, dtype=np.float64)
    queries = np.asarray(queries, dtype=np.float64)
    all_d = []
    kth = []
    for q in queries:
        row = []
        for x in train:
            row.append(float(np.sqrt(sum((qi - xi) ** 2 for qi, xi in zip(q, x)))))
        all_d.append(row)
        kth.append(sorted(row)[k - 1])
    threshold = sum(kth) / len(kth)
    sets = [[i for i, v in enumerate(row) if v <= threshold] for row in all_d]
    return threshold, sets


def brute_force_map(train_bits, query_bits, neighbor_sets):
    """mAP with ties broken by ascending training index; queries without neighbors are skipped."""
    aps = []
    for qb, nbrs in zip(query_bits, neighbor_sets):
        if not nbrs:
            continue
        nbrs = set(nbrs)
        dists = [(hamming_naive(qb, tb), idx) for idx, tb in enumerate(train_bits)]
        dists.sort()
        hits = 0
        terms = []
        for rank, (_, idx) in enumerate(dists, start=1):
            if idx in nbrs:
                hits += 1
                terms.append(hits / rank)
        aps.append(math.fsum(terms) / len(nbrs))
    return math.fsum(aps) / len(aps) if aps else 0.0


def batch_pca_projector(X, c):
    """Projector onto the top-``c`` eigenvectors of the (mean-removed) sample covariance."""
    Xc = X - X.mean(axis=0)
    vals, vecs = np.linalg.eigh(Xc.T @ Xc / len(X))
    top = vecs[:, np.argsort(vals)[::-1][:c]]
    return top @ top.T
