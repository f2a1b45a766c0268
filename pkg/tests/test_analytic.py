import math

import numpy as np
import pytest
from scipy.special import lambertw

from gilbert_rare.analytic import (StraussCalibration, calibrate_gamma, edge_intensity_ps,
                                   lambert_w0, lens_area, mean_edges_approx,
                                   pair_correlation_ps, prob_at_most_one_missing_edge,
                                   prob_no_missing_edges, saddle_point_intensity,
                                   unit_ball_volume)
from gilbert_rare.estimators_1d import crude_mc_few_missing_edges
from gilbert_rare.geometry import Window


def test_unit_ball_volume():
    assert unit_ball_volume(1) == pytest.approx(2)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_mean_edges_approx():
    assert mean_edges_approx(2, Window.interval(5)) == pytest.approx(20)
    assert mean_edges_approx(2, Window.box(20, 20)) == pytest.approx(800 * math.pi)


def test_prob_no_missing_edges_examples():
    assert prob_no_missing_edges(2, 1) == 1.0
    assert prob_no_missing_edges(2, 5) == pytest.approx(9 * math.exp(-8), rel=1e-14)
    ws = np.linspace(1, 10, 50)
    vals = [prob_no_missing_edges(2, w) for w in ws]
    assert np.all(np.diff(vals) < 0)
    with pytest.raises(ValueError):
        prob_no_missing_edges(2, 0.9)


def test_prob_at_most_one_missing_edge_examples():
    assert prob_at_most_one_missing_edge(2, 2) == pytest.approx(
        prob_no_missing_edges(2, 2) + math.exp(-2) * (1 + math.exp(-2)), rel=1e-14)
    # small lam: the one-gap term approaches (w - 3/2) lam^2 e^{-lam (w - 1)}
    lam, w = 1e-3, 6.0
    gap = prob_at_most_one_missing_edge(lam, w) - prob_no_missing_edges(lam, w) \
        - 0.5 * lam**2 * (w - 2) ** 2 * math.exp(-lam * w)
    assert gap == pytest.approx((w - 1.5) * lam**2 * math.exp(-lam * (w - 1)), rel=1e-2)
    for lam in (0.5, 1, 2, 4):
        for w in np.linspace(2, 9, 15):
            p1 = prob_at_most_one_missing_edge(lam, w)
            assert prob_no_missing_edges(lam, w) <= p1 <= 1
    with pytest.raises(ValueError):
        prob_at_most_one_missing_edge(2, 1.5)


@pytest.mark.parametrize("lam,w", [(2, 2), (2, 5), (1, 4), (3, 2.5)])
def test_missing_edge_formulas_against_crude(lam, w):
    n = 2_000_000
    r0 = crude_mc_few_missing_edges(lam, w, 0, n, seed=5)
    r1 = crude_mc_few_missing_edges(lam, w, 1, n, seed=6)
    assert abs(r0.estimate - prob_no_missing_edges(lam, w)) < 4 * r0.std_error
    assert abs(r1.estimate - prob_at_most_one_missing_edge(lam, w)) < 4 * r1.std_error


def test_lens_area():
    assert lens_area(0) == pytest.approx(math.pi)
    assert lens_area(2) == pytest.approx(0, abs=1e-15)
    rs = np.linspace(0, 2, 200)
    assert np.all(np.diff([lens_area(r) for r in rs]) < 0)
    with pytest.raises(ValueError):
        lens_area(2.1)


@pytest.mark.parametrize("x", [1e-12, 1e-3, 0.5, 1.0, math.e, 10.0, 1e3, 1e8])
def test_lambert_w0_matches_scipy(x):
    y = lambert_w0(x)
    assert y == pytest.approx(lambertw(x).real, rel=1e-13)
    assert abs(y * math.exp(y) - x) <= 1e-12 * x


def test_lambert_w0_zero_and_negative():
    assert lambert_w0(0.0) == 0.0
    with pytest.raises(ValueError):
        lambert_w0(-0.1)


def test_saddle_point_intensity_examples():
    g = math.pi * (1 - 0.3)
    assert saddle_point_intensity(math.e / g, 0.3) == pytest.approx(1 / g, rel=1e-13)
    assert saddle_point_intensity(1e-10, 0.5) == pytest.approx(1e-10, rel=1e-6)
    assert saddle_point_intensity(2.0, 1.0) == 2.0
    with pytest.raises(ValueError):
        saddle_point_intensity(2.0, 1.5)


def test_saddle_point_residual_grid():
    for lam in np.linspace(0.1, 10, 25):
        for s in np.linspace(0, 0.5, 11):
            g = (1 - s) * math.pi
            lps = saddle_point_intensity(lam, s)
            assert abs(lps * g * math.exp(lps * g) - lam * g) <= 1e-12 * lam * g


def test_pair_correlation_ps():
    c = StraussCalibration.from_gamma(2.0, 1.0)
    assert all(pair_correlation_ps(r, c) == pytest.approx(1.0) for r in np.linspace(0, 1, 11))
    c = StraussCalibration.from_gamma(2.0, 1.018)
    s, lps = c.interaction, c.lambda_ps
    ratio = pair_correlation_ps(1, c) / pair_correlation_ps(0, c)
    assert ratio == pytest.approx(math.exp((1 - s) ** 2 * lps * (lens_area(1) - math.pi)))
    vals = [pair_correlation_ps(r, c) for r in np.linspace(0, 1, 1000)]
    assert np.all(np.diff(vals) < 0)


def test_from_gamma_fields():
    c = StraussCalibration.from_gamma(2.0, 1.018)
    assert c.beta == math.log(1.018)
    assert c.interaction == pytest.approx(1 / 1.018)
    with pytest.raises(ValueError):
        StraussCalibration.from_gamma(2.0, 0.99)


def test_calibrate_gamma_stationary_intensity():
    c = calibrate_gamma(2.0, 0.2, 2 * math.pi)
    assert 1.016 <= c.gamma <= 1.020
    assert c.beta == math.log(c.gamma)
    resid = edge_intensity_ps(2.0, c.interaction) - 0.8 * 2 * math.pi
    assert abs(resid) < 1e-6 * 0.8 * 2 * math.pi


def test_calibrate_gamma_no_deviation_gives_one():
    mu = edge_intensity_ps(2.0, 1.0)
    assert mu == pytest.approx(2 * math.pi, rel=1e-12)
    assert calibrate_gamma(2.0, 0.0, mu).gamma == pytest.approx(1.0, abs=1e-9)


def test_calibrate_gamma_monotone_in_a():
    gammas = [calibrate_gamma(2.0, a, 2 * math.pi).gamma for a in (0.05, 0.1, 0.2, 0.3)]
    assert np.all(np.diff(gammas) > 0)


def test_calibrate_gamma_unbracketed():
    with pytest.raises(ValueError, match="no root bracketed"):
        calibrate_gamma(2.0, 0.0, 100.0)
