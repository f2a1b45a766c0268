"""Importance sampling for edge-count tails, layered on the Poisson-count conditioning.

Lower tail: start from ``floor(lam |W|)`` uniform points and thin them, removing
point ``i`` with probability proportional to ``gamma**deg(i)`` until the edge
count drops below ``(1 - a) mu``. Upper tail: add points one by one from a
piecewise-constant birth density proportional to ``gamma**n(bin)``, where
``n(bin)`` is the number of current points in the bin and its adjacent bins.
Both keep the log-likelihood ratio against the uniform (untilted) dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _grid
from .estimators_nd import _thresholds, default_cap
from .geometry import Window
from .point_process import poisson_cdf_table
from .stats import EstimateResult, map_blocks, run_replicates


@dataclass(frozen=True)
class ISSamples:
    """Per-replicate output of an importance sampler.

    ``k`` is the terminal point count fed to the Poisson distribution function
    and ``log_rho`` the accumulated ``log(dP/dQ)`` of the trajectory.
    """

    k: np.ndarray
    log_rho: np.ndarray


def _check_gamma(gamma):
    if not gamma >= 1.0:
        raise ValueError(f"gamma must be at least 1, got {gamma}")


# ---------------------------------------------------------------- lower tail

@njit(cache=True)
def _thinning_kernel(gen, count, n0, lower, lengths, geom, lo_thr, gamma, fixed_removals, cap):
    """Degree-tilted thinning.

    With ``fixed_removals < 0`` each replicate removes points while the edge
    count is at least ``lo_thr``; if the ``n0`` start points are already below
    it, fresh uniform points are appended instead (rho = 1) until the count
    reaches ``lo_thr``, and ``k`` is one less than that prefix length. With
    ``fixed_removals >= 0`` exactly that many points are removed.
    """
    log_g = math.log(gamma)
    size = max(n0, 16)
    pts = np.zeros((size, 3))
    deg = np.zeros(size, dtype=np.int64)
    buf = np.empty(size, dtype=np.int64)
    alive = np.empty(size, dtype=np.int64)
    links = (np.full(geom[3].shape[0], -1, dtype=np.int64), np.full(size, -1, dtype=np.int64),
             np.full(size, -1, dtype=np.int64), np.full(size, -1, dtype=np.int64))
    pw = np.empty(size + 1)
    for t in range(size + 1):
        pw[t] = gamma ** t
    ks = np.empty(count, dtype=np.int64)
    log_rho = np.zeros(count)
    for r in range(count):
        links[0][:] = -1
        edges = 0
        for i in range(n0):
            _grid.draw_uniform(gen, pts, i, lower, lengths)
            edges += _grid.insert(i, pts, deg, geom, links, buf)
            alive[i] = i
        m = n0
        lr = 0.0
        if fixed_removals < 0 and edges < lo_thr:
            # start already below the threshold: the stream has to be extended
            n = n0
            while edges < lo_thr:
                if n == cap:
                    raise RuntimeError("point cap reached before the lower threshold was met")
                if n == pts.shape[0]:
                    size = min(2 * n, cap)
                    pts = _grid.grow_rows(pts, size)
                    deg = _grid.grow_rows(deg, size)
                    buf = np.empty(size, dtype=np.int64)
                    alive = _grid.grow_rows(alive, size)
                    links = _grid.grow_links(links, size)
                _grid.draw_uniform(gen, pts, n, lower, lengths)
                edges += _grid.add_point(n, pts, geom, links)
                n += 1
            ks[r] = n - 1
            log_rho[r] = 0.0
            continue
        removed = 0
        while m > 0 and ((fixed_removals < 0 and edges >= lo_thr)
                         or (fixed_removals >= 0 and removed < fixed_removals)):
            s = 0.0
            for t in range(m):
                s += pw[deg[alive[t]]]
            u = gen.random() * s
            acc = 0.0
            j = m - 1
            for t in range(m):
                acc += pw[deg[alive[t]]]
                if u < acc:
                    j = t
                    break
            i = alive[j]
            # uniform removal has probability 1/m, tilted removal w_i / s
            lr += math.log(s) - math.log(m) - deg[i] * log_g
            edges -= _grid.remove(i, pts, deg, geom, links, buf)
            last = alive[m - 1]
            alive[j] = last
            m -= 1
            removed += 1
        ks[r] = m
        log_rho[r] = lr
    return ks, log_rho


def _lower_args(lam, window, lo, gamma, fixed_removals, cap):
    n0 = int(math.floor(lam * window.volume()))
    geom = _grid.make_geometry(window.lower, window.upper)
    cap = default_cap(lam, window) if cap is None else int(cap)
    return (n0, np.asarray(window.lower, dtype=float), window.lengths, geom, float(lo),
            float(gamma), int(fixed_removals), cap)


def _is_lower_block(gen, count, mean, args):
    ks, log_rho = _thinning_kernel(gen, count, *args)
    cdf, _ = poisson_cdf_table(int(ks.max()), mean)
    return np.exp(log_rho) * cdf[ks]


def is_lower_tail(lam: float, window: Window, a: float, mu: float, gamma: float, n: int,
                  seed: int = 0, workers: int = 1, cap: int | None = None) -> EstimateResult:
    """Importance sampling estimate of ``P(edges < (1 - a) mu)`` by degree-tilted thinning."""
    _check_gamma(gamma)
    lo, _ = _thresholds(mu, a)
    args = _lower_args(lam, window, lo, gamma, -1, cap)
    return run_replicates(_is_lower_block, n, seed, (lam * window.volume(), args), workers)


def _samples_block(gen, count, kernel, args):
    return kernel(gen, count, *args)


def _collect(kernel, args, n, seed, workers):
    blocks = map_blocks(_samples_block, n, seed, (kernel, args), workers)
    return ISSamples(np.concatenate([k for k, _ in blocks]),
                     np.concatenate([lr for _, lr in blocks]))


def is_lower_tail_samples(lam: float, window: Window, a: float, mu: float, gamma: float,
                          n: int, seed: int = 0, workers: int = 1,
                          fixed_removals: int | None = None) -> ISSamples:
    """Terminal counts and log-likelihood ratios of the thinning sampler.

    ``fixed_removals`` replaces the threshold rule by a fixed number of removals.
    """
    _check_gamma(gamma)
    lo, _ = _thresholds(mu, a)
    fr = -1 if fixed_removals is None else int(fixed_removals)
    return _collect(_thinning_kernel, _lower_args(lam, window, lo, gamma, fr, None), n, seed,
                    workers)


# ---------------------------------------------------------------- upper tail

@dataclass
class BirthGrid:
    """Piecewise-constant birth density over bins of side ``bin_side``.

    The unnormalised mass of bin ``b`` is ``vol(b) * gamma**n(b)`` where
    ``n(b)`` counts current points in ``b`` and its adjacent bins.
    """

    window: Window
    bin_side: float
    ncell: np.ndarray
    strides: np.ndarray
    nbr: np.ndarray
    vol: np.ndarray

    @classmethod
    def build(cls, window: Window, bin_side: float = 1.0) -> "BirthGrid":
        if not bin_side > 0:
            raise ValueError("bin_side must be positive")
        lengths = window.lengths
        ratio = lengths / bin_side
        if np.any(np.abs(ratio - np.round(ratio)) > 1e-9 * np.maximum(ratio, 1.0)):
            raise ValueError(f"bin_side={bin_side} does not divide window sides {lengths.tolist()}")
        geom = _grid.make_geometry(np.zeros(window.dim), ratio)
        _, ncell, strides, nbr = geom
        side = lengths / ncell[: window.dim]
        vol = np.full(nbr.shape[0], float(np.prod(side)))
        return cls(window, float(bin_side), ncell, strides, nbr, vol)

    def bin_of(self, x) -> int:
        x = np.asarray(x, dtype=float).reshape(-1)
        d = self.window.dim
        side = self.window.lengths / self.ncell[:d]
        k = np.clip(np.floor((x - self.window.lower) / side).astype(np.int64), 0,
                    self.ncell[:d] - 1)
        return int(k @ self.strides[:d])

    def neighbour_counts(self, points) -> np.ndarray:
        """``n(b)`` for every bin given a point array."""
        counts = np.zeros(self.nbr.shape[0], dtype=np.int64)
        for x in np.asarray(points, dtype=float).reshape(len(points), self.window.dim):
            counts[self.bin_of(x)] += 1
        out = np.zeros_like(counts)
        for b in range(self.nbr.shape[0]):
            row = self.nbr[b]
            out[b] = counts[row[row >= 0]].sum()
        return out

    def masses(self, points, gamma: float) -> np.ndarray:
        """Normalised bin masses of the birth density."""
        w = self.vol * float(gamma) ** self.neighbour_counts(points)
        return w / w.sum()

    def kernel_args(self):
        lower = np.asarray(self.window.lower, dtype=float)
        side = np.zeros(3)
        side[: self.window.dim] = self.window.lengths / self.ncell[: self.window.dim]
        return lower, side, self.ncell.astype(np.int64), self.strides, self.nbr, self.vol


@njit(cache=True)
def _fenwick_add(tree, i, v):
    i += 1
    n = tree.shape[0]
    while i < n:
        tree[i] += v
        i += i & (-i)


@njit(cache=True)
def _fenwick_find(tree, u, top):
    """Smallest index whose prefix sum exceeds ``u``."""
    pos = 0
    step = top
    while step > 0:
        nxt = pos + step
        if nxt < tree.shape[0] and tree[nxt] <= u:
            pos = nxt
            u -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True)
def _fenwick_total(tree, nb):
    s = 0.0
    i = nb
    while i > 0:
        s += tree[i]
        i -= i & (-i)
    return s


@njit(cache=True)
def _birth_kernel(gen, count, d, lower, lengths, geom, hi_thr, gamma, warm, fixed_births, cap,
                  blower, bside, bncell, bstrides, bnbr, bvol):
    """Tilted birth stream until the edge count exceeds ``hi_thr``.

    Returns the last count ``k`` with at most ``hi_thr`` edges and the
    log-likelihood ratio of all births made (including the crossing one).
    The first ``warm`` births are uniform. With ``fixed_births >= 0`` the
    stream stops after that many births instead.
    """
    nb = bvol.shape[0]
    top = 1
    while 2 * top <= nb:
        top *= 2
    tree = np.zeros(nb + 1)
    nbin = np.zeros(nb, dtype=np.int64)
    wt = np.empty(nb)
    log_wvol = 0.0
    for j in range(d):
        log_wvol += math.log(lengths[j])
    tilt = gamma != 1.0
    log_g = math.log(gamma)
    size = min(max(2 * warm, 64), cap)
    pts = np.zeros((size, 3))
    links = (np.full(geom[3].shape[0], -1, dtype=np.int64), np.full(size, -1, dtype=np.int64),
             np.full(size, -1, dtype=np.int64), np.full(size, -1, dtype=np.int64))
    ks = np.empty(count, dtype=np.int64)
    log_rho = np.zeros(count)
    for r in range(count):
        links[0][:] = -1
        tree[:] = 0.0
        for b in range(nb):
            nbin[b] = 0
            wt[b] = bvol[b]
            _fenwick_add(tree, b, bvol[b])
        edges = 0
        n = 0
        lr = 0.0
        while True:
            if fixed_births >= 0:
                if n == fixed_births:
                    break
            elif edges > hi_thr:
                break
            if n == cap:
                raise RuntimeError("birth cap reached before the upper threshold was crossed")
            if n == pts.shape[0]:
                size = min(2 * n, cap)
                pts = _grid.grow_rows(pts, size)
                links = _grid.grow_links(links, size)
            if n < warm or not tilt:
                _grid.draw_uniform(gen, pts, n, lower, lengths)
                k0 = min(int((pts[n, 0] - blower[0]) / bside[0]), bncell[0] - 1) if d > 0 else 0
                k1 = min(int((pts[n, 1] - blower[1]) / bside[1]), bncell[1] - 1) if d > 1 else 0
                k2 = min(int((pts[n, 2] - blower[2]) / bside[2]), bncell[2] - 1) if d > 2 else 0
                b = k0 + k1 * bstrides[1] + k2 * bstrides[2]
            else:
                z = _fenwick_total(tree, nb)
                b = _fenwick_find(tree, gen.random() * z, top)
                if b >= nb:
                    b = nb - 1
                k2 = b // bstrides[2] if d > 2 else 0
                rem = b - k2 * bstrides[2]
                k1 = rem // bstrides[1] if d > 1 else 0
                k0 = rem - k1 * bstrides[1]
                pts[n, 0] = blower[0] + (k0 + gen.random()) * bside[0]
                if d > 1:
                    pts[n, 1] = blower[1] + (k1 + gen.random()) * bside[1]
                if d > 2:
                    pts[n, 2] = blower[2] + (k2 + gen.random()) * bside[2]
                # uniform density 1/|W| over tilted density gamma^n(b) / z
                lr += math.log(z) - log_wvol - nbin[b] * log_g
            edges += _grid.add_point(n, pts, geom, links)
            n += 1
            if tilt:
                for t in range(bnbr.shape[1]):
                    c = bnbr[b, t]
                    if c < 0:
                        break
                    nbin[c] += 1
                    nw = wt[c] * gamma
                    _fenwick_add(tree, c, nw - wt[c])
                    wt[c] = nw
        ks[r] = n if fixed_births >= 0 else n - 1
        log_rho[r] = lr
    return ks, log_rho


def _upper_args(lam, window, hi, gamma, bin_side, warm_start, fixed_births, cap):
    if window.dim > _grid.MAX_DIM:
        raise ValueError(f"dimension {window.dim} not supported")
    grid = BirthGrid.build(window, bin_side)
    geom = _grid.make_geometry(window.lower, window.upper)
    cap = default_cap(lam, window) if cap is None else int(cap)
    warm = int(math.floor(lam * window.volume())) if warm_start else 0
    return (window.dim, np.asarray(window.lower, dtype=float), window.lengths, geom, float(hi),
            float(gamma), warm, int(fixed_births), cap) + grid.kernel_args()


def _is_upper_block(gen, count, mean, args):
    ks, log_rho = _birth_kernel(gen, count, *args)
    _, sf = poisson_cdf_table(int(ks.max()), mean)
    return np.exp(log_rho) * sf[ks]


UPPER_WARM_START = False


def is_upper_tail(lam: float, window: Window, a: float, mu: float, gamma: float, n: int,
                  seed: int = 0, workers: int = 1, bin_side: float = 1.0,
                  warm_start: bool = UPPER_WARM_START, cap: int | None = None) -> EstimateResult:
    """Importance sampling estimate of ``P(edges > (1 + a) mu)`` with clustering births.

    With ``warm_start`` the first ``floor(lam |W|)`` births are uniform and
    tilting starts afterwards; that prefix carries no likelihood weight.
    """
    _check_gamma(gamma)
    _, hi = _thresholds(mu, a)
    args = _upper_args(lam, window, hi, gamma, bin_side, warm_start, -1, cap)
    return run_replicates(_is_upper_block, n, seed, (lam * window.volume(), args), workers)


def is_upper_tail_samples(lam: float, window: Window, a: float, mu: float, gamma: float,
                          n: int, seed: int = 0, workers: int = 1, bin_side: float = 1.0,
                          warm_start: bool = UPPER_WARM_START,
                          fixed_births: int | None = None) -> ISSamples:
    """Terminal counts and log-likelihood ratios of the birth sampler.

    ``fixed_births`` replaces the threshold rule by a fixed number of births.
    """
    _check_gamma(gamma)
    _, hi = _thresholds(mu, a)
    fb = -1 if fixed_births is None else int(fixed_births)
    return _collect(_birth_kernel, _upper_args(lam, window, hi, gamma, bin_side, warm_start, fb,
                                               None), n, seed, workers)


# ---------------------------------------------------------------- pilot runs

@dataclass(frozen=True)
class PilotRow:
    gamma: float
    estimate: float
    variance: float


def pilot_tune_gamma(lam: float, window: Window, a: float, mu: float, tail: str, gammas,
                     n_pilot: int, seed: int = 0, workers: int = 1):
    """Run the matching IS estimator at each candidate ``gamma``; return the one
    with the smallest sample variance and the full table."""
    if n_pilot < 1000:
        raise ValueError("n_pilot must be at least 1000")
    if tail not in ("lower", "upper"):
        raise ValueError("tail must be 'lower' or 'upper'")
    gammas = [float(g) for g in gammas]
    if not gammas:
        raise ValueError("need at least one candidate gamma")
    est = is_lower_tail if tail == "lower" else is_upper_tail
    rows = []
    for g in gammas:
        res = est(lam, window, a, mu, g, n_pilot, seed=seed, workers=workers)
        rows.append(PilotRow(g, res.estimate, res.sample_variance))
    best = min(rows, key=lambda row: row.variance)
    return best.gamma, rows
