"""Closed-form quantities: missing-edge probabilities, mean edge counts and the
saddle-point calibration of the Strauss-type thinning parameter."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.integrate import quad

from .geometry import Window


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def mean_edges_approx(lam: float, window: Window) -> float:
    """Edge-effect-free mean edge count ``|W| lam^2 kappa_d / 2``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    return 0.5 * window.volume() * lam**2 * unit_ball_volume(window.dim)


def prob_no_missing_edges(lam: float, w: float) -> float:
    """Probability that the Gilbert graph on a Poisson process in ``[0, w]`` is complete."""
    if w < 1:
        raise ValueError(f"requires w >= 1, got w={w}")
    t = lam * (w - 1.0)
    return math.exp(-t) * (1.0 + t)


def prob_at_most_one_missing_edge(lam: float, w: float) -> float:
    """Probability of at most one missing edge on ``[0, w]``, ``w >= 2``.

    Exactly one pair is missing iff the extreme points ``x_1 < x'`` satisfy
    ``x' - x_1 > 1`` and every other point lies in ``[x' - 1, x_1 + 1]``.
    With ``t = x' - x_1`` this gives ``lam^2 e^{-lam w}`` times
    ``(w - 2)^2 / 2`` (``t > 2``, two points only) plus
    ``int_1^2 (w - t) e^{lam (2 - t)} dt`` (``1 < t <= 2``). The latter
    integral keeps the void factor of ``(x_1 + 1, x')``; dropping it gives
    the cruder ``(w - 3/2) lam^2 e^{-lam (w - 1)}``, its small-``lam`` limit.
    """
    if w < 2:
        raise ValueError(f"requires w >= 2, got w={w}")
    p0 = prob_no_missing_edges(lam, w)
    two_apart = 0.5 * lam**2 * (w - 2.0) ** 2 * math.exp(-lam * w)
    em = -math.expm1(-lam)  # 1 - e^{-lam}
    one_gap = ((w - 2.0) * lam * em + lam - em) * math.exp(-lam * (w - 1.0))
    return p0 + two_apart + one_gap


def lens_area(r: float) -> float:
    """Intersection area of two unit disks whose centres are ``r`` apart."""
    if not 0.0 <= r <= 2.0:
        raise ValueError(f"r must lie in [0, 2], got {r}")
    h = r / 2.0
    return 2.0 * math.acos(h) - r * math.sqrt(max(0.0, 1.0 - h * h))


def lambert_w0(x: float, rtol: float = 1e-14, max_iter: int = 100) -> float:
    """Principal branch of Lambert W for ``x >= 0`` by damped Newton on ``y e^y - x``."""
    if x < 0:
        raise ValueError("only non-negative arguments are supported")
    if x == 0:
        return 0.0
    y = math.log1p(x)
    for _ in range(max_iter):
        ey = math.exp(y)
        f = y * ey - x
        if abs(f) <= rtol * x:
            break
        step = f / (ey * (1.0 + y))
        while y - step <= -1.0:
            step *= 0.5
        y -= step
        if abs(step) <= rtol * abs(y):
            break
    return y


def saddle_point_intensity(lam: float, interaction: float) -> float:
    """Poisson-saddlepoint intensity of a planar Strauss process with unit range.

    Solves ``l G exp(l G) = lam G`` with ``G = (1 - interaction) pi``.
    ``interaction = 1`` is the Poisson limit and returns ``lam``.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    g = (1.0 - interaction) * math.pi
    if g < 0:
        raise ValueError(f"G = (1 - interaction) pi must be non-negative, got {g}")
    if g == 0:
        return lam
    return lambert_w0(lam * g) / g


@dataclass(frozen=True)
class StraussCalibration:
    """Thinning strength ``gamma`` with its saddle-point Strauss description.

    Removing points with probability proportional to ``gamma**deg`` is the
    death mechanism of a Strauss process with pair interaction
    ``interaction = 1 / gamma``; ``beta = log(gamma)`` is the energy per edge.
    """

    gamma: float
    beta: float
    interaction: float
    lambda_ps: float
    target_edges: float

    @classmethod
    def from_gamma(cls, lam: float, gamma: float, target_edges: float = math.nan):
        if not gamma >= 1:
            raise ValueError("gamma must be at least 1")
        s = 1.0 / gamma
        return cls(gamma, math.log(gamma), s, saddle_point_intensity(lam, s), target_edges)


def pair_correlation_ps(r: float, calib: StraussCalibration) -> float:
    """Saddle-point pair correlation ``s exp((1 - s)^2 b(r) lambda_ps)`` on ``[0, 1]``."""
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"r must lie in [0, 1], got {r}")
    s = calib.interaction
    return s * math.exp((1.0 - s) ** 2 * lens_area(r) * calib.lambda_ps)


def edge_intensity_ps(lam: float, interaction: float) -> float:
    """Edges per unit area under the saddle-point approximation:
    ``lambda_ps^2 * int_0^1 pi r rho_ps(r) dr``."""
    s = interaction
    lps = saddle_point_intensity(lam, s)
    k = (1.0 - s) ** 2 * lps
    integral, _ = quad(lambda r: math.pi * r * s * math.exp(k * lens_area(r)), 0.0, 1.0,
                       epsabs=0.0, epsrel=1e-12, limit=200)
    return lps**2 * integral


def calibrate_gamma(lam: float, a: float, mu: float, tol: float = 1e-14) -> StraussCalibration:
    """Thinning strength whose saddle-point Strauss process has ``(1 - a) mu`` edges per unit area.

    ``mu`` is the edge intensity (edges per unit area) of the planar Poisson
    Gilbert graph, ``lam^2 pi / 2`` without edge effects. Solved by bisection
    over the interaction parameter in ``(0, 1]``.
    """
    if not lam > 0 or not mu > 0:
        raise ValueError("lam and mu must be positive")
    if not 0.0 <= a < 1.0:
        raise ValueError("a must lie in [0, 1)")
    target = (1.0 - a) * mu

    def excess(s):
        return edge_intensity_ps(lam, s) - target

    lo, hi = 1e-12, 1.0
    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo > 0 or f_hi < 0:
        raise ValueError(
            "no root bracketed: edge intensity minus target is "
            f"{f_lo:.6g} at interaction={lo:g} and {f_hi:.6g} at interaction={hi:g}"
        )
    if f_hi == 0:
        lo = hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0:
            lo = mid
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    gamma = 1.0 / s
    return StraussCalibration(gamma, math.log(gamma), s, saddle_point_intensity(lam, s), target)
