import math

import numpy as np
import pytest

from gilbert_rare.estimators_nd import (_crossing_kernel, _lower_block, _stream_args,
                                        _upper_block, cond_mc_lower_tail, cond_mc_upper_tail,
                                        crossing_indices, crude_mc_tail, edge_count_quantiles,
                                        mu_estimate, sample_edge_counts)
from gilbert_rare.geometry import Window
from gilbert_rare.point_process import RngStream
from oracles import exact_mean_edges_box


def combined(a, b):
    return math.hypot(a.std_error, b.std_error)


def test_crossing_indices_collinear():
    w = Window.interval(10)
    stream = [(0.5 * i,) for i in range(20)]
    # edge counts along the prefix: 0, 1, 3, 5, 7, ...
    r = crossing_indices(stream, mu=3, a=0.0, window=w)
    assert (r.k_below, r.k_above) == (3, 3)
    # thresholds 3 and 7: 7 edges at k = 5 is still not above
    r = crossing_indices(stream, mu=5, a=0.4, window=w)
    assert (r.k_below, r.k_above) == (3, 5)


def test_crossing_indices_exhausted():
    w = Window.interval(10)
    with pytest.raises(RuntimeError, match="exhausted"):
        crossing_indices([(0.0,), (5.0,)], mu=3, a=0.1, window=w)
    with pytest.raises(RuntimeError):
        crossing_indices(((0.01 * i,) for i in range(100)), mu=50, a=0.1, window=w, cap=5)


@pytest.mark.parametrize("window", [Window.interval(6), Window.box(4, 3)])
def test_kernel_matches_reference_on_same_stream(window):
    lam, mu, a = 2.0, 30.0, 0.25
    lo, hi = (1 - a) * mu, (1 + a) * mu
    args = _stream_args(lam, window, lo, hi, True, True, None)
    for s in range(20):
        kb, ka = _crossing_kernel(RngStream(s).generator(), 1, *args)
        u = RngStream(s).generator().random((2000, window.dim))
        stream = np.asarray(window.lower) + window.lengths * u
        ref = crossing_indices(stream, mu, a, window)
        assert (kb[0], ka[0]) == (ref.k_below, ref.k_above)


def test_kernel_growth_is_transparent():
    window = Window.box(4, 4)
    args = list(_stream_args(2.0, window, 60.0, 110.0, True, True, None))
    small = list(args)
    small[-2] = 4  # start with room for four points and double as needed
    a = _crossing_kernel(RngStream(3).generator(), 50, *args)
    b = _crossing_kernel(RngStream(3).generator(), 50, *small)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_kernel_cap_raises():
    window = Window.box(4, 4)
    args = list(_stream_args(2.0, window, 60.0, 110.0, True, True, 20))
    with pytest.raises(RuntimeError):
        _crossing_kernel(RngStream(0).generator(), 1, *args)


def test_degenerate_threshold_tails_sum_to_one():
    # a = 0 with non-integer mu: every stream has k_below = k_above + 1
    window, lam, mu = Window.box(3, 3), 2.0, 40.5
    args = _stream_args(lam, window, mu, mu, True, True, None)
    mean = lam * window.volume()
    lo = _lower_block(RngStream(9).generator(), 500, mean, args)
    hi = _upper_block(RngStream(9).generator(), 500, mean, args)
    np.testing.assert_allclose(lo + hi, 1.0, rtol=0, atol=1e-12)


@pytest.mark.parametrize("window,mu,a", [
    (Window.interval(5), 18.0, 0.4),
    (Window.box(3, 3), 41.5, 0.3),
])
def test_conditional_matches_crude(window, mu, a):
    lam = 2.0
    for tail, cond_fn in (("lower", cond_mc_lower_tail), ("upper", cond_mc_upper_tail)):
        crude = crude_mc_tail(lam, window, a, mu, tail, 400_000, seed=1)
        cond = cond_fn(lam, window, a, mu, 40_000, seed=2)
        assert abs(cond.estimate - crude.estimate) < 4 * combined(cond, crude)
        # conditioning on the uniform stream cannot increase the variance
        assert cond.sample_variance < crude.estimate * (1 - crude.estimate)


def test_conditional_workers_deterministic():
    w = Window.box(3, 3)
    runs = [cond_mc_upper_tail(2.0, w, 0.3, 41.5, 10_000, seed=4, workers=k) for k in (1, 4)]
    assert runs[0].estimate == runs[1].estimate
    assert runs[0].sample_variance == runs[1].sample_variance


def test_mu_estimate_against_exact_box_mean():
    lam, w = 2.0, Window.box(6, 5)
    r = mu_estimate(lam, w, 40_000, seed=5)
    assert abs(r.mean - exact_mean_edges_box(lam, 6, 5)) < 4 * r.std_error
    assert abs(r.intensity - lam**2 * math.pi / 2) < 4 * r.intensity_se
    assert r.n_samples == 40_000


def test_mu_estimate_small_window_has_no_intensity():
    r = mu_estimate(2.0, Window.box(1.5, 1.5), 1000, seed=0)
    assert math.isnan(r.intensity)


def test_sample_edge_counts_1d_mean():
    counts = sample_edge_counts(2.0, Window.interval(5), 50_000, seed=6)
    se = counts.std(ddof=1) / math.sqrt(counts.size)
    # 1D: lam^2 / 2 * (2 w - 1)
    assert abs(counts.mean() - 18.0) < 4 * se
    assert counts.dtype.kind == "i" and counts.min() >= 0


def test_quantiles():
    rows = edge_count_quantiles(2.0, Window.box(5, 5), [0.5, 0.1], 20_000, seed=7)
    med = rows[0]
    counts = sample_edge_counts(2.0, Window.box(5, 5), 20_000, seed=7)
    assert med.q_low == med.q_high == np.quantile(counts, 0.5, method="inverted_cdf")
    assert med.rel_low == pytest.approx(med.q_low / counts.mean() - 1)
    # right-skewed counts: the median sits below the mean
    assert med.rel_low < 0
    assert rows[1].q_low < med.q_low < rows[1].q_high
    assert rows[1].rel_low < 0 < rows[1].rel_high
    assert not any(r.low_count_warning for r in rows)


def test_quantiles_warn_on_thin_tail():
    with pytest.warns(UserWarning, match="fewer than 10"):
        rows = edge_count_quantiles(2.0, Window.box(3, 3), [1e-3], 1000, seed=0, mu=40.0)
    assert rows[0].low_count_warning


def test_argument_checks():
    w = Window.box(3, 3)
    with pytest.raises(ValueError):
        cond_mc_lower_tail(2.0, w, 1.0, 40.0, 10)
    with pytest.raises(ValueError):
        cond_mc_upper_tail(2.0, w, 0.2, 0.0, 10)
    with pytest.raises(ValueError):
        crude_mc_tail(2.0, w, 0.2, 40.0, "middle", 10)
    with pytest.raises(ValueError):
        edge_count_quantiles(2.0, w, [1.5], 10)
