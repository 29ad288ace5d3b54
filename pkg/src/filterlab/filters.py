"""One assimilation cycle for each filter.

Particle filters take an ``(N, n)`` ensemble and return a new one of the same
size; the UKF takes and returns a :class:`~filterlab.gmm.Gaussian`.
``propagate`` maps a stack of states ``(K, n)`` to the forecast stack and is
where the dynamics and the time span live. Passing ``y=None`` skips the
measurement update (forecast and resample only).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import CholeskyFailure, TotalWeightCollapse, UkfDivergence
from .gaussian_sum import apply_defensive_factor, component_updates, update_weights
from .gmm import Gaussian, GaussianMixture, cholesky, symmetrize
from .kde import kde_estimate
from .resampling import deterministic_resample, stochastic_resample

log = logging.getLogger(__name__)


def lorenz_defensive_factor(N):
    """``0.1 / sqrt(N)``: vanishes as the ensemble grows."""
    return 0.1 / np.sqrt(N)


def analysis(prior, mm, y, v):
    """Gaussian-sum update with a uniform-weight fallback.

    If every component evidence underflows, the component updates are kept
    and the weights are reset to uniform (with a logged warning) instead of
    aborting the run.
    """
    if y is None:
        return prior
    means, covs, log_ev = component_updates(prior, mm, y)
    try:
        w = update_weights(log_ev, prior.weights)
    except TotalWeightCollapse:
        log.warning("all component evidences underflowed; resetting weights to uniform")
        w = np.full(len(prior), 1.0 / len(prior))
    w = apply_defensive_factor(w, v)
    return GaussianMixture(means, covs, w / w.sum())


def _forecast_mixture(ensemble, propagate, Q):
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    if X.shape[0] < 2 and Q is None:
        raise ValueError("a single-member ensemble needs process noise to form a kernel estimate")
    return kde_estimate(propagate(X), Q)


def pineapple_step(ensemble, propagate, mm, y, Q=None, v=0.0, M=51):
    """Deterministic cycle: propagate, kernel estimate (+Q), update, OT resample.

    No random numbers are drawn; equal inputs give bit-identical outputs.
    """
    post = analysis(_forecast_mixture(ensemble, propagate, Q), mm, y, v)
    return deterministic_resample(post, M)


def engmf_step(ensemble, propagate, mm, y, Q=None, v=0.0, rng=None):
    """Stochastic cycle: as :func:`pineapple_step` with i.i.d. mixture sampling."""
    if rng is None:
        raise ValueError("engmf_step needs a random stream")
    X = np.atleast_2d(np.asarray(ensemble, dtype=float))
    post = analysis(_forecast_mixture(X, propagate, Q), mm, y, v)
    return stochastic_resample(post, X.shape[0], rng)


@dataclass(frozen=True)
class UkfParams:
    alpha: float = 1.0
    beta: float = 2.0
    kappa: float = -3.0

    def spread(self, n):
        """``lambda = alpha**2 (n + kappa) - n``."""
        return self.alpha**2 * (n + self.kappa) - n

    def weights(self, n):
        """Mean and covariance weights for the ``2n + 1`` sigma points."""
        lam = self.spread(n)
        if n + lam == 0:
            raise ValueError(f"sigma-point scaling n + lambda vanishes for n={n}")
        wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
        wm[0] = lam / (n + lam)
        wc = wm.copy()
        wc[0] += 1.0 - self.alpha**2 + self.beta
        return wm, wc


def sigma_points(g, p):
    n = g.dim
    lam = p.spread(n)
    if n + lam <= 0:
        raise ValueError(f"n + lambda = {n + lam} must be positive")
    L = cholesky((n + lam) * g.cov)
    return np.vstack([g.mean, g.mean + L.T, g.mean - L.T])


def ukf_step(g, propagate, mm, y, Q=None, p=UkfParams()):
    """Unscented predict (additive ``Q``) and update.

    Raises
    ------
    UkfDivergence
        When a covariance along the way stops being positive definite.
    """
    n = g.dim
    wm, wc = p.weights(n)
    try:
        Xs = propagate(sigma_points(g, p))
        mean = wm @ Xs
        dX = Xs - mean
        P = symmetrize((dX * wc[:, None]).T @ dX + (0.0 if Q is None else Q))
        pred = Gaussian(mean, P)
        if y is None:
            cholesky(P)
            return pred
        Xs = sigma_points(pred, p)
        Z = np.array([np.atleast_1d(mm.h(x)) for x in Xs])
        zhat = Z[0] + wm @ np.array([mm.residual(z, Z[0]) for z in Z])
        dZ = np.array([mm.residual(z, zhat) for z in Z])
        dX = Xs - mean
        S = symmetrize((dZ * wc[:, None]).T @ dZ + mm.noise_cov)
        Pxz = (dX * wc[:, None]).T @ dZ
        Ls = cholesky(S)
        K = np.linalg.solve(Ls.T, np.linalg.solve(Ls, Pxz.T)).T
        innov = mm.residual(np.atleast_1d(np.asarray(y, dtype=float)), zhat)
        P_post = symmetrize(P - K @ S @ K.T)
        cholesky(P_post)
    except CholeskyFailure as exc:
        raise UkfDivergence(str(exc)) from None
    if not np.all(np.isfinite(innov)):
        raise UkfDivergence("non-finite innovation")
    return Gaussian(mean + K @ innov, P_post)
