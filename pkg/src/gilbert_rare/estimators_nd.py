"""Edge-count tail probabilities in d-dimensional windows.

The conditional estimators draw an endless stream of iid uniform points in the
window and record the prefix lengths at which the Gilbert graph crosses the
edge thresholds; the Poisson number of points is then integrated out exactly.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _grid
from .geometry import PointConfiguration, Window
from .point_process import poisson_cdf_table
from .stats import EstimateResult, RunningStats, map_blocks, run_replicates

DEFAULT_CAP_FACTOR = 100


@dataclass(frozen=True)
class CrossingIndices:
    k_below: int
    k_above: int


def _thresholds(mu, a):
    if not mu > 0:
        raise ValueError("mu must be positive")
    if not 0.0 <= a < 1.0:
        raise ValueError("a must lie in [0, 1)")
    return (1.0 - a) * mu, (1.0 + a) * mu


def default_cap(lam: float, window: Window) -> int:
    return int(DEFAULT_CAP_FACTOR * max(lam * window.volume(), 1.0))


def crossing_indices(stream, mu: float, a: float, window: Window,
                     cap: int | None = None) -> CrossingIndices:
    """First prefix length with at least ``(1 - a) mu`` edges and last one with at most ``(1 + a) mu``.

    ``stream`` is any iterable of points in ``window``. Raises ``RuntimeError``
    if it runs out (or ``cap`` points are used) before both are determined.
    """
    lo, hi = _thresholds(mu, a)
    cfg = PointConfiguration(window, capacity=256)
    k_below = k_above = -1
    for k, x in enumerate(stream, start=1):
        if cap is not None and k > cap:
            break
        edges, _ = cfg.insert(x)
        if k_below < 0 and edges >= lo:
            k_below = k
        if edges > hi:
            k_above = k - 1
            break
    if k_below < 0 or k_above < 0:
        raise RuntimeError(
            f"stream exhausted after {len(cfg)} points with {cfg.edge_count} edges "
            f"before crossing thresholds ({lo:g}, {hi:g})")
    return CrossingIndices(k_below, k_above)


@njit(cache=True)
def _advance_stream(gen, pts, links, state, lower, lengths, geom, lo_thr, hi_thr,
                    need_lower, need_upper):
    """Extend one stream until both thresholds are settled or ``pts`` is full.

    ``state`` is ``[n, edges, k_below, k_above]`` and is updated in place;
    returns True once done.
    """
    n, edges, kb, ka = state[0], state[1], state[2], state[3]
    size = pts.shape[0]
    done = False
    while n < size:
        _grid.draw_uniform(gen, pts, n, lower, lengths)
        edges += _grid.add_point(n, pts, geom, links)
        n += 1
        if kb < 0 and edges >= lo_thr:
            kb = n
        if ka < 0 and edges > hi_thr:
            ka = n - 1
        if (kb >= 0 or not need_lower) and (ka >= 0 or not need_upper):
            done = True
            break
    state[0], state[1], state[2], state[3] = n, edges, kb, ka
    return done


@njit(cache=True)
def _crossing_kernel(gen, count, lower, lengths, geom, lo_thr, hi_thr,
                     need_lower, need_upper, start_cap, cap):
    """Crossing prefix lengths for ``count`` fresh uniform streams (-1 if not needed)."""
    size = start_cap
    pts = np.zeros((size, 3))
    links = (np.full(geom[3].shape[0], -1, dtype=np.int64), np.full(size, -1, dtype=np.int64),
             np.full(size, -1, dtype=np.int64), np.full(size, -1, dtype=np.int64))
    state = np.empty(4, dtype=np.int64)
    k_below = np.full(count, -1, dtype=np.int64)
    k_above = np.full(count, -1, dtype=np.int64)
    for r in range(count):
        links[0][:] = -1
        state[0] = 0
        state[1] = 0
        state[2] = -1
        state[3] = -1
        while not _advance_stream(gen, pts, links, state, lower, lengths, geom, lo_thr, hi_thr,
                                  need_lower, need_upper):
            if size == cap:
                raise RuntimeError("point cap reached before the edge thresholds were crossed")
            size = min(2 * size, cap)
            pts = _grid.grow_rows(pts, size)
            links = _grid.grow_links(links, size)
        k_below[r] = state[2]
        k_above[r] = state[3]
    return k_below, k_above


def _stream_args(lam, window, lo, hi, need_lower, need_upper, cap):
    geom = _grid.make_geometry(window.lower, window.upper)
    lower = np.asarray(window.lower, dtype=float)
    start = int(1.5 * lam * window.volume()) + 64
    cap = default_cap(lam, window) if cap is None else int(cap)
    return (lower, window.lengths, geom, float(lo), float(hi), need_lower, need_upper,
            min(start, cap), cap)


def _lower_block(gen, count, mean, stream_args):
    kb, _ = _crossing_kernel(gen, count, *stream_args)
    cdf, _ = poisson_cdf_table(int(kb.max()), mean)
    # P(Poisson < K_below) = F(K_below - 1)
    return np.where(kb >= 1, cdf[np.maximum(kb - 1, 0)], 0.0)


def _upper_block(gen, count, mean, stream_args):
    _, ka = _crossing_kernel(gen, count, *stream_args)
    _, sf = poisson_cdf_table(int(ka.max()), mean)
    return sf[ka]


def cond_mc_lower_tail(lam: float, window: Window, a: float, mu: float, n: int,
                       seed: int = 0, workers: int = 1, cap: int | None = None) -> EstimateResult:
    """Conditional MC for ``P(edges < (1 - a) mu)``; ``mu`` is supplied by the caller."""
    lo, hi = _thresholds(mu, a)
    args = _stream_args(lam, window, lo, hi, True, False, cap)
    return run_replicates(_lower_block, n, seed, (lam * window.volume(), args), workers)


def cond_mc_upper_tail(lam: float, window: Window, a: float, mu: float, n: int,
                       seed: int = 0, workers: int = 1, cap: int | None = None) -> EstimateResult:
    """Conditional MC for ``P(edges > (1 + a) mu)``; ``mu`` is supplied by the caller."""
    lo, hi = _thresholds(mu, a)
    args = _stream_args(lam, window, lo, hi, False, True, cap)
    return run_replicates(_upper_block, n, seed, (lam * window.volume(), args), workers)


@njit(cache=True)
def _poisson_graph_kernel(gen, count, lam_vol, lower, lengths, geom, inner_lo, inner_hi):
    """Edge count and sum of degrees of points in the inner box, per Poisson sample."""
    d = lower.shape[0]
    edges = np.zeros(count, dtype=np.int64)
    inner_deg = np.zeros(count, dtype=np.int64)
    size = int(lam_vol + 10.0 * math.sqrt(lam_vol) + 64.0)
    pts = np.zeros((size, 3))
    deg = np.zeros(size, dtype=np.int64)
    buf = np.empty(size, dtype=np.int64)
    links = (np.full(geom[3].shape[0], -1, dtype=np.int64), np.full(size, -1, dtype=np.int64),
             np.full(size, -1, dtype=np.int64), np.full(size, -1, dtype=np.int64))
    for r in range(count):
        m = gen.poisson(lam_vol)
        if m > size:
            size = 2 * m
            pts = np.zeros((size, 3))
            deg = np.zeros(size, dtype=np.int64)
            buf = np.empty(size, dtype=np.int64)
            links = _grid.grow_links(links, size)
        links[0][:] = -1
        e = 0
        for i in range(m):
            _grid.draw_uniform(gen, pts, i, lower, lengths)
            e += _grid.insert(i, pts, deg, geom, links, buf)
        s = 0
        for i in range(m):
            inside = True
            for j in range(d):
                if pts[i, j] < inner_lo[j] or pts[i, j] > inner_hi[j]:
                    inside = False
                    break
            if inside:
                s += deg[i]
        edges[r] = e
        inner_deg[r] = s
    return edges, inner_deg


def _graph_args(lam, window):
    geom = _grid.make_geometry(window.lower, window.upper)
    inner = window.eroded(1.0)
    if inner is None:
        inner_lo = inner_hi = np.full(window.dim, np.nan)
    else:
        inner_lo, inner_hi = np.asarray(inner.lower), np.asarray(inner.upper)
    return (lam * window.volume(), np.asarray(window.lower, dtype=float), window.lengths,
            geom, inner_lo, inner_hi)


def _edge_count_block(gen, count, graph_args):
    return _poisson_graph_kernel(gen, count, *graph_args)


def sample_edge_counts(lam: float, window: Window, n: int, seed: int = 0,
                       workers: int = 1) -> np.ndarray:
    """Edge counts of ``n`` independent Poisson Gilbert graphs in ``window``."""
    blocks = map_blocks(_edge_count_block, n, seed, (_graph_args(lam, window),), workers)
    return np.concatenate([e for e, _ in blocks])


def _crude_tail_block(gen, count, graph_args, threshold, upper):
    edges, _ = _poisson_graph_kernel(gen, count, *graph_args)
    hit = edges > threshold if upper else edges < threshold
    return hit.astype(float)


def crude_mc_tail(lam: float, window: Window, a: float, mu: float, tail: str, n: int,
                  seed: int = 0, workers: int = 1) -> EstimateResult:
    """Crude MC for ``P(edges < (1 - a) mu)`` (``tail="lower"``) or ``P(edges > (1 + a) mu)``."""
    lo, hi = _thresholds(mu, a)
    if tail not in ("lower", "upper"):
        raise ValueError("tail must be 'lower' or 'upper'")
    upper = tail == "upper"
    return run_replicates(_crude_tail_block, n, seed,
                          (_graph_args(lam, window), hi if upper else lo, upper), workers)


@dataclass(frozen=True)
class EdgeMean:
    """Simulated mean edge count in a window and border-corrected edge intensity.

    ``intensity`` counts half the degrees of points at distance at least 1
    from the boundary, per unit area of that inner window, so it estimates
    the edge intensity of the stationary graph (``lam^2 kappa_d / 2``).
    """

    mean: float
    std_error: float
    intensity: float
    intensity_se: float
    n_samples: int
    seconds: float


def mu_estimate(lam: float, window: Window, n: int, seed: int = 0, workers: int = 1) -> EdgeMean:
    t0 = time.perf_counter()
    blocks = map_blocks(_edge_count_block, n, seed, (_graph_args(lam, window),), workers)
    e_acc, i_acc = RunningStats(), RunningStats()
    inner = window.eroded(1.0)
    for edges, inner_deg in blocks:
        e_acc = e_acc.merge(RunningStats.from_array(edges))
        if inner is not None:
            i_acc = i_acc.merge(RunningStats.from_array(inner_deg / (2.0 * inner.volume())))
    e = e_acc.result()
    if inner is None:
        intensity = se = math.nan
    else:
        r = i_acc.result()
        intensity, se = r.estimate, r.std_error
    return EdgeMean(e.estimate, e.std_error, intensity, se, e.n_samples,
                    time.perf_counter() - t0)


@dataclass(frozen=True)
class QuantileRow:
    alpha: float
    q_low: float
    q_high: float
    rel_low: float
    rel_high: float
    low_count_warning: bool


def edge_count_quantiles(lam: float, window: Window, alphas, n: int, seed: int = 0,
                         mu: float | None = None, workers: int = 1) -> list[QuantileRow]:
    """Empirical ``alpha`` and ``1 - alpha`` quantiles of the edge count.

    Quantiles are order statistics (inverted empirical CDF). Relative
    deviations are taken from ``mu``, or from the sample mean when omitted.
    """
    alphas = [float(x) for x in alphas]
    if any(not 0 < x < 1 for x in alphas):
        raise ValueError("alphas must lie in (0, 1)")
    counts = sample_edge_counts(lam, window, n, seed, workers)
    ref = float(counts.mean()) if mu is None else float(mu)
    rows = []
    for alpha in alphas:
        lo = float(np.quantile(counts, alpha, method="inverted_cdf"))
        hi = float(np.quantile(counts, 1.0 - alpha, method="inverted_cdf"))
        few = alpha * n < 10
        if few:
            warnings.warn(f"alpha={alpha} with n={n} leaves fewer than 10 samples in the tail")
        rows.append(QuantileRow(alpha, lo, hi, (lo - ref) / ref, (hi - ref) / ref, few))
    return rows
