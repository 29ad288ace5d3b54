"""Gaussian-sum measurement update: per-component EKF and evidence weights."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import CholeskyFailure, CovarianceDefect, InnovationSingular, TotalWeightCollapse
from .gmm import Gaussian, GaussianMixture, LOG_2PI, cholesky, symmetrize


def _difference(y, yhat):
    return y - yhat


@dataclass(frozen=True)
class MeasurementModel:
    """Nonlinear observation ``y = h(x) + e``, ``e ~ N(0, R)``.

    ``residual(y, yhat)`` forms innovations; override it for angular
    components that need wrapping.
    """

    h: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    noise_cov: np.ndarray
    residual: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        object.__setattr__(self, "noise_cov", np.atleast_2d(np.asarray(self.noise_cov, dtype=float)))
        if self.residual is None:
            object.__setattr__(self, "residual", _difference)

    @property
    def dim(self):
        return self.noise_cov.shape[0]

    @classmethod
    def linear(cls, H, R):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        return cls(lambda x: H @ x, lambda x: H, R)


def ekf_component_update(g, mm, y, component=None):
    """EKF update of one Gaussian, linearised at its mean.

    Returns
    -------
    posterior : Gaussian
        Joseph-form covariance, symmetrised.
    log_evidence : float
        ``log N(y; h(mean), H cov H^T + R)``.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    H = np.atleast_2d(mm.jacobian(g.mean))
    innov = np.atleast_1d(mm.residual(y, np.atleast_1d(mm.h(g.mean))))
    PHt = g.cov @ H.T
    S = symmetrize(H @ PHt + mm.noise_cov)
    try:
        Ls = cholesky(S)
    except CholeskyFailure:
        raise InnovationSingular(component=component) from None
    # K = P H^T S^{-1} via two triangular solves
    K = np.linalg.solve(Ls.T, np.linalg.solve(Ls, PHt.T)).T
    z = np.linalg.solve(Ls, innov)
    log_ev = -0.5 * (z @ z) - np.sum(np.log(np.diag(Ls))) - 0.5 * y.size * LOG_2PI

    mean = g.mean + K @ innov
    A = np.eye(g.dim) - K @ H
    cov = symmetrize(A @ g.cov @ A.T + K @ mm.noise_cov @ K.T)
    try:
        cholesky(cov)
    except CholeskyFailure:
        raise CovarianceDefect("posterior covariance failed the Cholesky gate", component) from None
    return Gaussian(mean, cov), float(log_ev)


def update_weights(log_evidences, prior_weights):
    """Posterior weights ``w_i ∝ w_i^- exp(log_evidence_i)``.

    Normalised in log space. Raises :class:`TotalWeightCollapse` when no
    component carries mass.
    """
    log_ev = np.asarray(log_evidences, dtype=float)
    w = np.asarray(prior_weights, dtype=float)
    if log_ev.shape != w.shape:
        raise ValueError("log-evidence and weight vectors differ in length")
    with np.errstate(divide="ignore"):
        logw = np.log(w) + log_ev
    if not np.any(np.isfinite(logw)) or np.any(np.isnan(logw)) or np.any(logw == np.inf):
        raise TotalWeightCollapse("no component has positive finite posterior mass")
    shifted = logw - np.max(logw)
    out = np.exp(shifted - logsumexp(shifted))
    return out / out.sum()


def apply_defensive_factor(weights, v):
    """Blend weights toward uniform: ``(1 - v) w + v / N``."""
    w = np.asarray(weights, dtype=float)
    if not 0.0 <= v < 1.0:
        raise ValueError(f"defensive factor must lie in [0, 1), got {v}")
    if v == 0.0:
        return w.copy()
    return (1.0 - v) * w + v / w.size


def component_updates(prior, mm, y):
    """EKF-update every component; returns ``(means, covs, log_evidences)``."""
    means = np.empty_like(prior.means)
    covs = np.empty((len(prior), prior.dim, prior.dim))
    log_ev = np.empty(len(prior))
    for i, g in enumerate(prior.components):
        post, log_ev[i] = ekf_component_update(g, mm, y, component=i)
        means[i], covs[i] = post.mean, post.cov
    return means, covs, log_ev


def gaussian_sum_update(prior, mm, y, v=0.0):
    """Update every component, reweight by evidence, then regularise."""
    means, covs, log_ev = component_updates(prior, mm, y)
    w = apply_defensive_factor(update_weights(log_ev, prior.weights), v)
    return GaussianMixture(means, covs, w / w.sum())
