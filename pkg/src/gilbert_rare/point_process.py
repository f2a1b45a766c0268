"""Sampling primitives: reproducible streams, Poisson processes and the Poisson CDF."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Window


@dataclass(frozen=True)
class RngStream:
    """Independent random stream ``stream`` derived from a master ``seed``.

    Streams are children of ``numpy.random.SeedSequence(seed)`` with spawn key
    ``(stream,)``, so distinct stream ids give independent PCG64 generators
    and the same pair always reproduces the same draws.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_poisson_1d(lam: float, w: float, rng) -> np.ndarray:
    """Poisson points on ``[0, w]`` built from partial sums of Exp(lam) spacings."""
    if not lam > 0 or not w > 0:
        raise ValueError(f"lam and w must be positive, got lam={lam}, w={w}")
    gen = _as_generator(rng)
    out = []
    z = gen.exponential(1.0 / lam)
    while z <= w:
        out.append(z)
        z += gen.exponential(1.0 / lam)
    return np.asarray(out, dtype=float)


def sample_uniform_stream(window: Window, n: int, rng) -> np.ndarray:
    """``n`` iid uniform points in ``window`` as an ``(n, d)`` array."""
    if n < 0:
        raise ValueError("n must be non-negative")
    gen = _as_generator(rng)
    u = gen.random((n, window.dim))
    return np.asarray(window.lower) + window.lengths * u


def poisson_log_pmf_table(kmax: int, mean: float) -> np.ndarray:
    """``log P(Poisson(mean) = k)`` for ``k = 0..kmax`` by forward recurrence."""
    logp = np.empty(kmax + 1)
    logp[0] = -mean
    if kmax > 0:
        logp[1:] = math.log(mean) - np.log(np.arange(1, kmax + 1, dtype=float))
    return np.cumsum(logp)


def _tail_end(mean: float) -> int:
    return int(mean + 40.0 * math.sqrt(mean) + 60)


def poisson_cdf_table(kmax: int, mean: float) -> tuple[np.ndarray, np.ndarray]:
    """CDF and survival function ``P(N <= k)``, ``P(N > k)`` for ``k = 0..kmax``.

    The survival function is summed from the upper tail, so it keeps full
    relative precision where the CDF is within rounding of one.
    """
    if not mean > 0:
        raise ValueError("mean must be positive")
    if kmax < 0:
        raise ValueError("kmax must be non-negative")
    top = max(kmax + 1, _tail_end(mean))
    logp = poisson_log_pmf_table(top, mean)
    # scale by the largest term before exponentiating; mean^k/k! overflows past ~700
    shift = logp.max()
    p = np.exp(logp - shift)
    cdf = np.cumsum(p) * math.exp(shift)
    sf = np.cumsum(p[::-1])[::-1] * math.exp(shift)
    sf = np.append(sf[1:], 0.0)
    # keep the smaller of the two sums and complement it, so both stay consistent
    low = cdf <= 0.5
    sf = np.where(low, 1.0 - cdf, sf)
    cdf = np.where(low, cdf, 1.0 - sf)
    return np.clip(cdf[: kmax + 1], 0.0, 1.0), np.clip(sf[: kmax + 1], 0.0, 1.0)


def poisson_cdf(k: int, mean: float) -> float:
    """``P(Poisson(mean) <= k)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    cdf, _ = poisson_cdf_table(int(k), mean)
    return float(cdf[-1])


def poisson_sf(k: int, mean: float) -> float:
    """``P(Poisson(mean) > k)``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    _, sf = poisson_cdf_table(int(k), mean)
    return float(sf[-1])
