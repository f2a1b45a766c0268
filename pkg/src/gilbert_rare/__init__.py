"""Rare-event estimators for the edge count of Gilbert graphs on Poisson points."""

from .analytic import (StraussCalibration, calibrate_gamma, lambert_w0, mean_edges_approx,
                       prob_at_most_one_missing_edge, prob_no_missing_edges,
                       saddle_point_intensity)
from .estimators_1d import (cond_mc_at_most_one_edge, cond_mc_few_edges, cond_mc_no_edges,
                            crude_mc_few_edges, crude_mc_few_missing_edges)
from .estimators_nd import (CrossingIndices, cond_mc_lower_tail, cond_mc_upper_tail,
                            crossing_indices, crude_mc_tail, edge_count_quantiles, mu_estimate)
from .geometry import PointConfiguration, Window, count_edges
from .importance import BirthGrid, is_lower_tail, is_upper_tail, pilot_tune_gamma
from .point_process import RngStream, poisson_cdf, poisson_sf
from .stats import EstimateResult

__version__ = "0.1.0"

__all__ = [
    "BirthGrid", "CrossingIndices", "EstimateResult", "PointConfiguration", "RngStream",
    "StraussCalibration", "Window", "calibrate_gamma", "cond_mc_at_most_one_edge",
    "cond_mc_few_edges", "cond_mc_lower_tail", "cond_mc_no_edges", "cond_mc_upper_tail",
    "count_edges", "crossing_indices", "crude_mc_few_edges", "crude_mc_few_missing_edges",
    "crude_mc_tail", "edge_count_quantiles", "is_lower_tail", "is_upper_tail", "lambert_w0",
    "mean_edges_approx", "mu_estimate", "pilot_tune_gamma", "poisson_cdf", "poisson_sf",
    "prob_at_most_one_missing_edge", "prob_no_missing_edges", "saddle_point_intensity",
]
