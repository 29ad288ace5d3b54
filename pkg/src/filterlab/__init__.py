"""Gaussian-mixture particle filters with deterministic optimal-transport resampling."""

from .errors import FilterLabError
from .filters import UkfParams, engmf_step, pineapple_step, ukf_step
from .fibgrid import component_grid, gmm_grid, standard_fib_grid
from .gaussian_sum import MeasurementModel, ekf_component_update, gaussian_sum_update
from .gmm import Gaussian, GaussianMixture, gaussian_logpdf, mixture_moments, sample_mean_cov
from .integrate import IntegratorConfig, integrate
from .kde import kde_estimate, silverman_bandwidth
from .resampling import deterministic_resample, keyed_rng, stochastic_resample
from .transport import barycentric_projection, cost_matrix, solve_transport

__version__ = "0.1.0"

__all__ = [
    "FilterLabError",
    "Gaussian",
    "GaussianMixture",
    "IntegratorConfig",
    "MeasurementModel",
    "UkfParams",
    "barycentric_projection",
    "component_grid",
    "cost_matrix",
    "deterministic_resample",
    "ekf_component_update",
    "engmf_step",
    "gaussian_logpdf",
    "gaussian_sum_update",
    "gmm_grid",
    "integrate",
    "kde_estimate",
    "keyed_rng",
    "mixture_moments",
    "pineapple_step",
    "sample_mean_cov",
    "silverman_bandwidth",
    "solve_transport",
    "standard_fib_grid",
    "stochastic_resample",
    "ukf_step",
]
