"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools

import numpy as np
from mpmath import exp, factorial, mp, mpf


def brute_force_edges(points) -> int:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    count = 0
    for i, j in itertools.combinations(range(n), 2):
        if float(np.sum((pts[i] - pts[j]) ** 2)) <= 1.0:
            count += 1
    return count


def _pos(x):
    return x if x > 0 else mpf(0)


def exact_p_le_k_1d(lam: float, w: float, k: int, dps: int = 40) -> float:
    """P(at most k edges) for k in {0, 1} on a Poisson process in [0, w].

    Given n uniform points, a fixed set of m inner spacings all exceed 1 with
    probability (1 - m/w)_+^n. In 1D at most one edge means at most one
    spacing of length <= 1, which inclusion-exclusion turns into a finite sum.
    """
    if k not in (0, 1):
        raise ValueError("k must be 0 or 1")
    with mp.workdps(dps):
        lam, w = mpf(lam), mpf(w)
        total = exp(-lam * w) * (1 + lam * w)
        n = 2
        while n - 2 < w:
            poi = exp(-lam * w) * (lam * w) ** n / factorial(n)
            all_far = _pos(1 - (n - 1) / w) ** n
            if k == 1:
                all_far += (n - 1) * (_pos(1 - (n - 2) / w) ** n - all_far)
            total += poi * all_far
            n += 1
        return float(total)


def exact_mean_edges_box(lam: float, a: float, b: float) -> float:
    """Mean edge count in an ``a x b`` box with ``a, b >= 2``.

    ``lam^2 / 2`` times the measure of pairs in the box at distance at most 1,
    which is ``pi a b - 4 (a + b) / 3 + 1/2`` for the unit disk.
    """
    return 0.5 * lam**2 * (np.pi * a * b - 4.0 * (a + b) / 3.0 + 0.5)


def poisson_cdf_mp(k: int, mean: float, dps: int = 60) -> float:
    with mp.workdps(dps):
        m = mpf(mean)
        term = exp(-m)
        s = term
        for j in range(1, k + 1):
            term = term * m / j
            s += term
        return float(s)
