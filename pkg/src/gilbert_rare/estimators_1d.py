"""Estimators for few edges of the Gilbert graph on a Poisson process in ``[0, w]``."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .stats import EstimateResult, run_replicates


@njit(cache=True)
def _sample_counts(gen, count, lam, w):
    """Point counts and edge counts of ``count`` Poisson samples on ``[0, w]``."""
    npts = np.zeros(count, dtype=np.int64)
    edges = np.zeros(count, dtype=np.int64)
    buf = np.empty(int(lam * w + 20.0 * math.sqrt(lam * w) + 50.0))
    for i in range(count):
        n = 0
        z = gen.standard_exponential() / lam
        while z <= w:
            if n == buf.shape[0]:
                bigger = np.empty(2 * n)
                bigger[:n] = buf
                buf = bigger
            buf[n] = z
            n += 1
            z += gen.standard_exponential() / lam
        e = 0
        left = 0
        for j in range(n):
            while buf[j] - buf[left] > 1.0:
                left += 1
            e += j - left
        npts[i] = n
        edges[i] = e
    return npts, edges


def _crude_block(gen, count, lam, w, k):
    _, edges = _sample_counts(gen, count, lam, w)
    return (edges <= k).astype(float)


def _crude_missing_block(gen, count, lam, w, k):
    npts, edges = _sample_counts(gen, count, lam, w)
    missing = npts * (npts - 1) // 2 - edges
    return (missing <= k).astype(float)


@njit(cache=True)
def _no_edges_block(gen, count, lam, w):
    out = np.empty(count)
    for i in range(count):
        z = gen.standard_exponential() / lam
        p = 1.0
        while z <= w:
            p *= math.exp(-lam * min(w - z, 1.0))
            z += 1.0 + gen.standard_exponential() / lam
        out[i] = p
    return out


@njit(cache=True)
def _one_edge_block(gen, count, lam, w):
    out = np.empty(count)
    for i in range(count):
        z = gen.standard_exponential() / lam
        p = 1.0
        while True:
            y = gen.standard_exponential() / lam
            z += y
            if y <= 1.0:
                break
        while z <= w:
            p *= math.exp(-lam * min(w - z, 1.0))
            z += 1.0 + gen.standard_exponential() / lam
        out[i] = p
    return out


def _check(lam, w, n):
    if not lam > 0 or not w > 0:
        raise ValueError(f"lam and w must be positive, got lam={lam}, w={w}")
    if n < 1:
        raise ValueError("n must be at least 1")


def crude_mc_few_edges(lam: float, w: float, k: int, n: int, seed: int = 0,
                       workers: int = 1) -> EstimateResult:
    """Fraction of ``n`` Poisson samples whose Gilbert graph has at most ``k`` edges."""
    _check(lam, w, n)
    if k < 0:
        raise ValueError("k must be non-negative")
    return run_replicates(_crude_block, n, seed, (float(lam), float(w), int(k)), workers)


def crude_mc_few_missing_edges(lam: float, w: float, k: int, n: int, seed: int = 0,
                               workers: int = 1) -> EstimateResult:
    """Fraction of samples with at most ``k`` point pairs farther apart than 1."""
    _check(lam, w, n)
    return run_replicates(_crude_missing_block, n, seed, (float(lam), float(w), int(k)), workers)


def cond_mc_no_edges(lam: float, w: float, n: int, seed: int = 0,
                     workers: int = 1) -> EstimateResult:
    """Conditional MC for ``P(no edges)``.

    Each replicate walks the chain of points ``X*_1 < X*_2 < ...`` where each
    is the first point beyond the previous one plus 1, and multiplies the
    void probabilities of the unit gaps they open inside ``[0, w]``.
    """
    _check(lam, w, n)
    if w < 1:
        raise ValueError(f"requires w >= 1, got w={w}")
    return run_replicates(_no_edges_block, n, seed, (float(lam), float(w)), workers)


def cond_mc_at_most_one_edge(lam: float, w: float, n: int, seed: int = 0,
                             workers: int = 1) -> EstimateResult:
    """Conditional MC for ``P(at most one edge)``: walk to the first spacing <= 1,
    then proceed as in :func:`cond_mc_no_edges` from that point."""
    _check(lam, w, n)
    if w < 1:
        raise ValueError(f"requires w >= 1, got w={w}")
    return run_replicates(_one_edge_block, n, seed, (float(lam), float(w)), workers)


def cond_mc_few_edges(lam: float, w: float, k: int, n: int, seed: int = 0,
                      workers: int = 1) -> EstimateResult:
    if k == 0:
        return cond_mc_no_edges(lam, w, n, seed, workers)
    if k == 1:
        return cond_mc_at_most_one_edge(lam, w, n, seed, workers)
    raise NotImplementedError(
        f"conditional estimator not implemented for k={k}; only k in (0, 1) is supported")
