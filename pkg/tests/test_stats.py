import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gilbert_rare.estimators_1d import cond_mc_no_edges
from gilbert_rare.stats import EstimateResult, RunningStats, block_sizes, run_replicates

floats = st.floats(-1e6, 1e6, allow_nan=False)


@given(st.lists(floats, min_size=2, max_size=200))
def test_running_stats_matches_numpy(xs):
    acc = RunningStats()
    for x in xs:
        acc.push(x)
    assert math.isclose(acc.mean, np.mean(xs), rel_tol=1e-9, abs_tol=1e-6)
    assert math.isclose(acc.variance, np.var(xs, ddof=1), rel_tol=1e-7, abs_tol=1e-3)


@given(st.lists(floats, max_size=100), st.lists(floats, max_size=100), st.lists(floats, max_size=100))
def test_merge_is_associative(a, b, c):
    sa, sb, sc = (RunningStats.from_array(v) for v in (a, b, c))
    left = sa.merge(sb).merge(sc)
    right = sa.merge(sb.merge(sc))
    whole = RunningStats.from_array(a + b + c)
    assert left.count == right.count == whole.count
    for s in (left, right):
        assert math.isclose(s.mean, whole.mean, rel_tol=1e-9, abs_tol=1e-6)
        assert math.isclose(s.m2, whole.m2, rel_tol=1e-7, abs_tol=1e-2)


def test_block_sizes():
    assert block_sizes(10, 4) == [4, 4, 2]
    assert block_sizes(8, 4) == [4, 4]
    assert sum(block_sizes(12345)) == 12345


def test_estimate_result_fields():
    r = RunningStats.from_array([0.0, 1.0, 0.0, 1.0]).result()
    assert r.n_samples == 4 and r.estimate == 0.5
    assert math.isclose(r.std_error, math.sqrt(r.sample_variance / 4))
    assert math.isclose(r.improvement_vs_crude(), 0.25 / r.sample_variance)
    assert EstimateResult(0.1, 0, 0, 10, 0).improvement_vs_crude() == math.inf


def _uniform_block(gen, count, scale):
    return gen.random(count) * scale


@pytest.mark.parametrize("workers", [4, 16])
def test_determinism_across_worker_counts(workers):
    ref = run_replicates(_uniform_block, 50_000, 11, (2.0,), workers=1, block_size=1000)
    got = run_replicates(_uniform_block, 50_000, 11, (2.0,), workers=workers, block_size=1000)
    assert (got.estimate, got.std_error, got.sample_variance) == \
        (ref.estimate, ref.std_error, ref.sample_variance)


def test_estimator_determinism_across_workers():
    runs = [cond_mc_no_edges(2.0, 5.0, 20_000, seed=3, workers=w) for w in (1, 4, 16)]
    assert len({(r.estimate, r.sample_variance) for r in runs}) == 1


def test_run_replicates_rejects_empty():
    with pytest.raises(ValueError):
        run_replicates(_uniform_block, 0, 1, (1.0,))
