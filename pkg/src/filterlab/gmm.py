"""Gaussian and Gaussian-mixture value types.

Ensembles are plain ``(N, n)`` float arrays: one row per member, row order
significant. Mixtures store stacked means ``(N, n)``, covariances
``(N, n, n)`` and weights ``(N,)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import CholeskyFailure

LOG_2PI = np.log(2.0 * np.pi)
WEIGHT_TOL = 1e-12


def symmetrize(a):
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def cholesky(cov, component=None):
    """Lower Cholesky factor; the single positive-definiteness gate.

    Raises
    ------
    CholeskyFailure
        If ``cov`` is not (numerically) positive definite or not finite.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.all(np.isfinite(cov)):
        raise CholeskyFailure("covariance has non-finite entries", component)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise CholeskyFailure(component=component) from None


@dataclass(frozen=True)
class Gaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError(f"mean {mean.shape} and cov {cov.shape} do not match")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self):
        return self.mean.size


@dataclass(frozen=True)
class GaussianMixture:
    """Weighted sum of Gaussians.

    Parameters
    ----------
    means : array_like, shape (N, n)
    covs : array_like, shape (N, n, n)
        A single ``(n, n)`` matrix is broadcast to every component.
    weights : array_like, shape (N,)
        Nonnegative, summing to one within ``1e-12``.
    """

    means: np.ndarray
    covs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        N, n = means.shape
        covs = np.asarray(self.covs, dtype=float)
        if covs.shape == (n, n):
            covs = np.broadcast_to(covs, (N, n, n))
        if covs.shape != (N, n, n):
            raise ValueError(f"covs shape {covs.shape} does not match means {means.shape}")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape != (N,):
            raise ValueError(f"expected {N} weights, got {weights.shape}")
        if N < 1:
            raise ValueError("a mixture needs at least one component")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("mixture weights must be finite and nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError(f"mixture weights sum to {weights.sum()!r}, not 1")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "covs", covs)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_components(cls, components, weights):
        return cls(
            np.array([g.mean for g in components]),
            np.array([g.cov for g in components]),
            weights,
        )

    def __len__(self):
        return self.weights.size

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def components(self):
        return [Gaussian(m, c) for m, c in zip(self.means, self.covs)]

    def permuted(self, order):
        order = np.asarray(order)
        return GaussianMixture(self.means[order], self.covs[order], self.weights[order])


def gaussian_logpdf(g, x):
    """Log density of ``g`` at ``x`` (a point or a stack of points)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != g.dim:
        raise ValueError(f"point dimension {x.shape[-1]} != Gaussian dimension {g.dim}")
    L = cholesky(g.cov)
    diff = (x - g.mean).reshape(-1, g.dim).T
    z = solve_triangular(L, diff, lower=True)
    maha = np.sum(z * z, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    out = -0.5 * (maha + logdet + g.dim * LOG_2PI)
    return out[0] if x.ndim == 1 else out.reshape(x.shape[:-1])


def sample_mean_cov(ensemble):
    """Sample mean and unbiased (divisor ``N - 1``) sample covariance.

    A single-member ensemble returns a zero covariance.
    """
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    N, n = X.shape
    mean = X.mean(axis=0)
    if N < 2:
        return mean, np.zeros((n, n))
    A = X - mean
    return mean, symmetrize(A.T @ A / (N - 1))


def mixture_moments(m):
    """Mean and covariance of a Gaussian mixture (law of total variance)."""
    w = m.weights
    mean = w @ m.means
    A = m.means - mean
    cov = np.einsum("i,ijk->jk", w, m.covs) + (A * w[:, None]).T @ A
    return mean, symmetrize(cov)
