"""Gaussian kernel density estimates of an ensemble."""

import numpy as np

from .errors import CholeskyFailure, DegenerateKDE
from .gmm import GaussianMixture, cholesky, sample_mean_cov, symmetrize


def silverman_bandwidth(N, n):
    """Silverman's rule for the squared bandwidth ``beta**2``.

    Optimal for Gaussian data and vanishing as ``N`` grows, so the kernel
    estimate still converges for non-Gaussian ensembles.
    """
    if N < 1 or n < 1:
        raise ValueError("ensemble size and dimension must be positive")
    return (4.0 / (N * (n + 2.0))) ** (2.0 / (n + 4.0))


def kde_estimate(ensemble, process_noise=None):
    """Build a Gaussian mixture with one kernel per ensemble member.

    Every component shares the covariance ``beta**2 * Cov(X) + Q``; additive
    process noise enters here instead of being sampled per particle.

    Parameters
    ----------
    ensemble : array_like, shape (N, n)
    process_noise : array_like, shape (n, n), optional

    Returns
    -------
    GaussianMixture
        Uniform weights ``1/N`` and means equal to the members.
    """
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    N, n = X.shape
    _, cov = sample_mean_cov(X)
    shared = silverman_bandwidth(N, n) * cov
    if process_noise is not None:
        shared = shared + np.asarray(process_noise, dtype=float)
    shared = symmetrize(shared)
    try:
        cholesky(shared)
    except CholeskyFailure:
        raise DegenerateKDE(
            f"kernel covariance of a {N}-member ensemble is singular; "
            "supply process noise or more distinct members"
        ) from None
    return GaussianMixture(X.copy(), shared, np.full(N, 1.0 / N))
