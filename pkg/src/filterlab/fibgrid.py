"""Deterministic Fibonacci-lattice grids for Gaussians and Gaussian mixtures.

The standard grid for ``N(0, I_n)`` with ``M = 2K + 1`` points is built as

1. ``K`` lattice points on the unit cube: the first coordinate is the
   stratified index ``(k + K + 1/2) / M`` and coordinate ``d >= 2`` is
   ``frac(1/2 + k * phi**-(d - 1))`` where ``phi`` is the real root of
   ``x**n = x + 1`` (the golden ratio when ``n = 2``, which gives the classic
   Fibonacci lattice);
2. the componentwise inverse normal CDF;
3. the origin plus the antipodal reflection of every point;
4. a single scalar rescaling so that the empirical covariance has trace ``n``.

Point ``K + j`` of the grid is lattice point ``|j|`` with sign ``sign(j)``,
so the centre sits at index ``(M - 1) // 2`` and ``points[K - j] ==
-points[K + j]`` bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from .errors import InvalidGridSize
from .gmm import cholesky

# Acklam's rational approximation of the inverse normal CDF (|rel err| < 1.15e-9)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408161907416e00)
_P_LOW = 0.02425


def _horner(coeffs, x):
    out = np.zeros_like(x)
    for c in coeffs:
        out = out * x + c
    return out


def norm_ppf(p):
    """Inverse standard normal CDF on the open interval (0, 1).

    Acklam's rational approximation followed by one Halley refinement step,
    which brings the error down to a few ulps. Upper-half arguments are
    mirrored (``1 - p`` is exact there), so ``norm_ppf(1 - p) == -norm_ppf(p)``.
    """
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("norm_ppf is defined on (0, 1) only")
    upper = p > 0.5
    q = np.where(upper, 1.0 - p, p)
    x = np.empty_like(q)
    lo = q < _P_LOW
    mid = ~lo

    r = np.sqrt(-2 * np.log(q[lo]))
    x[lo] = _horner(_C, r) / (_horner(_D, r) * r + 1)
    r = q[mid] - 0.5
    rr = r * r
    x[mid] = _horner(_A, rr) * r / (_horner(_B, rr) * rr + 1)

    e = 0.5 * erfc(-x / np.sqrt(2)) - q
    u = e * np.sqrt(2 * np.pi) * np.exp(0.5 * x * x)
    x = x - u / (1 + 0.5 * x * u)
    return np.where(upper, -x, x)


@lru_cache(maxsize=None)
def generalized_golden_ratio(d):
    """Unique real root above one of ``x**(d + 1) = x + 1``."""
    if d < 1:
        raise ValueError("d must be positive")
    x = 1.5
    for _ in range(100):
        step = (x ** (d + 1) - x - 1) / ((d + 1) * x**d - 1)
        x -= step
        if abs(step) < 1e-16:
            break
    return x


@dataclass(frozen=True)
class DeterministicGrid:
    """Equally weighted points; ``points[center_index]`` is the mean."""

    points: np.ndarray

    @property
    def size(self):
        return self.points.shape[0]

    @property
    def center_index(self):
        return (self.size - 1) // 2

    @property
    def weight_each(self):
        return 1.0 / self.size


@dataclass(frozen=True)
class WeightedCollection:
    """Union of per-component grids in ``mat`` order.

    The first ``N`` rows are the component means; the remaining rows follow
    grouped by component, then by grid index.
    """

    points: np.ndarray
    weights: np.ndarray
    component_index: np.ndarray
    grid_index: np.ndarray


def _check_size(M):
    if int(M) != M or M < 1 or M % 2 == 0:
        raise InvalidGridSize(f"grid size must be a positive odd integer, got {M}")
    return int(M)


@lru_cache(maxsize=64)
def _standard_points(M, n):
    K = M // 2
    pts = np.zeros((M, n))
    if K == 0:
        return pts
    k = np.arange(1, K + 1)
    u = np.empty((K, n))
    u[:, 0] = (k + K + 0.5) / M
    if n > 1:
        phi = generalized_golden_ratio(n - 1)
        for d in range(1, n):
            u[:, d] = np.mod(0.5 + k * phi ** (-d), 1.0)
    z = norm_ppf(u)
    cov_trace = 2.0 * np.sum(z * z) / M
    z *= np.sqrt(n / cov_trace)
    pts[K + 1:] = z
    pts[:K] = -z[::-1]
    pts.setflags(write=False)
    return pts


def standard_fib_grid(M, n):
    """``M``-point deterministic approximation of ``N(0, I_n)``."""
    M = _check_size(M)
    if n < 1:
        raise ValueError("dimension must be positive")
    return DeterministicGrid(_standard_points(M, int(n)))


def component_grid(g, M, component=None):
    """Affine image ``mean + L p`` of the standard grid, ``L`` lower Cholesky."""
    std = standard_fib_grid(M, g.dim).points
    L = cholesky(g.cov, component)
    pts = g.mean + std @ L.T
    pts[M // 2] = g.mean
    return DeterministicGrid(pts)


def gmm_grid(m, M):
    """Grid every mixture component and order the union for transport.

    Point ``(i, j)`` carries weight ``w_i / M``.
    """
    M = _check_size(M)
    N, n = m.means.shape
    c = M // 2
    grids = np.empty((N, M, n))
    for i, g in enumerate(m.components):
        grids[i] = component_grid(g, M, component=i).points
    others = np.delete(np.arange(M), c)
    points = np.concatenate([grids[:, c, :], grids[:, others, :].reshape(-1, n)])
    comp = np.concatenate([np.arange(N), np.repeat(np.arange(N), M - 1)])
    gidx = np.concatenate([np.full(N, c), np.tile(others, N)])
    return WeightedCollection(points, m.weights[comp] / M, comp, gidx)
