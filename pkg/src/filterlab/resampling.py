"""Resampling a Gaussian mixture back to an equally weighted ensemble.

Two strategies share one interface:

* :func:`stochastic_resample` draws i.i.d. samples (the EnGMF baseline);
* :func:`deterministic_resample` grids every component, then transports the
  gridded mixture onto the component means and takes barycentres. It uses no
  random numbers at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fibgrid import gmm_grid
from .gmm import cholesky
from .transport import barycentric_projection, cost_matrix, solve_transport


def keyed_rng(seed, *key):
    """Counter-based Philox stream identified by ``(seed, *key)``.

    The same key always yields the same stream, independent of how many
    other streams were created before it.
    """
    words = [int(seed)] + [int(k) for k in key]
    if any(w < 0 for w in words):
        raise ValueError("stream keys must be nonnegative integers")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))


@dataclass(frozen=True)
class Stochastic:
    pass


@dataclass(frozen=True)
class DeterministicOT:
    M: int = 51

    def __post_init__(self):
        if self.M < 1 or self.M % 2 == 0:
            raise ValueError(f"grid size must be odd, got {self.M}")


def _factor(cov, i):
    if not np.any(cov):
        return np.zeros_like(cov)
    return cholesky(cov, component=i)


def stochastic_resample(m, n_out, rng, return_components=False):
    """Draw ``n_out`` i.i.d. samples from the mixture ``m``.

    One uniform per particle picks the component by inverting the cumulative
    weights; a standard normal vector is then mapped through that
    component's Cholesky factor. An all-zero covariance is treated as a
    point mass.
    """
    cdf = np.cumsum(m.weights)
    u = rng.random(n_out) * cdf[-1]
    comp = np.minimum(np.searchsorted(cdf, u, side="right"), len(m) - 1)
    z = rng.standard_normal((n_out, m.dim))
    factors = {}
    out = np.empty((n_out, m.dim))
    for k, c in enumerate(comp):
        if c not in factors:
            factors[c] = _factor(m.covs[c], c)
        out[k] = m.means[c] + factors[c] @ z[k]
    return (out, comp) if return_components else out


def _merge_coincident(points):
    """Group identical rows; returns first-occurrence representatives and labels."""
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return first[order], rank[inverse.reshape(-1)]


def deterministic_resample(m, M=51, pivot="dantzig", initial="least-cost"):
    """One equally weighted point per mixture component, without randomness.

    The ``N * M`` grid points (weights ``w_i / M``) are optimally transported
    onto the ``N`` component means with uniform target weights ``1 / N``;
    output point ``j`` is the barycentre of the mass delivered to mean ``j``.
    Coincident means are solved as one target whose mass is then shared in
    proportion, so duplicates map to identical outputs.
    """
    coll = gmm_grid(m, M)
    N = len(m)
    dst_w = np.full(N, 1.0 / N)
    reps, label = _merge_coincident(coll.points[:N])
    merged_w = np.bincount(label, weights=dst_w)
    plan = solve_transport(cost_matrix(coll.points, coll.points[reps]), coll.weights, merged_w,
                           pivot=pivot, initial=initial)
    T = plan.plan[:, label] * (dst_w / merged_w[label])
    return barycentric_projection(T, coll.points, dst_w)


def resample(m, strategy, n_out=None, rng=None):
    if isinstance(strategy, DeterministicOT):
        return deterministic_resample(m, strategy.M)
    if rng is None:
        raise ValueError("stochastic resampling needs a random stream")
    return stochastic_resample(m, len(m) if n_out is None else n_out, rng)
