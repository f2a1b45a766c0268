"""Running moments, estimate records and the blocked replicate runner.

Replicates are split into fixed-size blocks; block ``j`` draws from
``RngStream(seed, j)``. Block partials are merged in block order, so the
result does not depend on how many worker processes computed the blocks.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .point_process import RngStream

BLOCK_SIZE = 4096


@dataclass
class EstimateResult:
    estimate: float
    std_error: float
    sample_variance: float
    n_samples: int
    seconds: float

    def improvement_vs_crude(self) -> float:
        """``p(1 - p) / Var(method)``: variance gain over the crude indicator estimator."""
        p = self.estimate
        if self.sample_variance <= 0:
            return math.inf
        return p * (1.0 - p) / self.sample_variance

    def relative_error(self) -> float:
        return self.std_error / self.estimate if self.estimate else math.inf

    def as_dict(self) -> dict:
        return asdict(self)


class RunningStats:
    """Welford accumulator for count, mean and sum of squared deviations."""

    def __init__(self, count: int = 0, mean: float = 0.0, m2: float = 0.0):
        self.count = count
        self.mean = mean
        self.m2 = m2

    def push(self, x: float) -> None:
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)

    @classmethod
    def from_array(cls, values) -> "RunningStats":
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls()
        mean = float(values.mean())
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge(self, other: "RunningStats") -> "RunningStats":
        """Chan et al. pairwise combination; returns a new accumulator."""
        n = self.count + other.count
        if n == 0:
            return RunningStats()
        if self.count == 0:
            return RunningStats(other.count, other.mean, other.m2)
        if other.count == 0:
            return RunningStats(self.count, self.mean, self.m2)
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / n
        return RunningStats(n, mean, m2)

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    def result(self, seconds: float = 0.0) -> EstimateResult:
        var = self.variance
        se = math.sqrt(var / self.count) if self.count else 0.0
        return EstimateResult(self.mean, se, var, self.count, seconds)


def block_sizes(n: int, block_size: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(int(n), block_size)
    return [block_size] * full + ([rest] if rest else [])


def _call_block(job):
    fn, seed, block, count, args = job
    gen = RngStream(seed, block).generator()
    return fn(gen, count, *args)


def map_blocks(fn, n: int, seed: int, args=(), workers: int = 1,
               block_size: int = BLOCK_SIZE) -> list:
    """Run ``fn(generator, count, *args)`` on every block; outputs in block order.

    ``fn`` must be a module-level function so it can be shipped to workers.
    """
    if n < 1:
        raise ValueError("number of replicates must be at least 1")
    jobs = [(fn, seed, j, c, tuple(args)) for j, c in enumerate(block_sizes(n, block_size))]
    if workers <= 1 or len(jobs) == 1:
        return [_call_block(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call_block, jobs))


def run_replicates(fn, n: int, seed: int, args=(), workers: int = 1,
                   block_size: int = BLOCK_SIZE) -> EstimateResult:
    """Mean and spread of the replicate values returned block-wise by ``fn``."""
    t0 = time.perf_counter()
    blocks = map_blocks(fn, n, seed, args, workers, block_size)
    acc = RunningStats()
    for values in blocks:
        acc = acc.merge(RunningStats.from_array(values))
    return acc.result(time.perf_counter() - t0)
