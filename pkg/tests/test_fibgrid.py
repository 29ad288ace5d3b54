import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import norm

from filterlab.errors import InvalidGridSize
from filterlab.fibgrid import (component_grid, generalized_golden_ratio, gmm_grid, norm_ppf,
                               standard_fib_grid)
from filterlab.gmm import Gaussian, GaussianMixture
from filterlab.models import pineapple_gmm

from conftest import random_spd

# Frobenius distance of the grid covariance from the identity, recorded from
# the first verified build (regression baselines)
FROBENIUS_BASELINE = {
    (2, 25): 0.21730885421281712,
    (2, 51): 0.0565639979224408,
    (2, 201): 0.02352505469536027,
    (3, 25): 0.44331069488505853,
    (3, 51): 0.25788881699887295,
    (3, 201): 0.22428396612062682,
    (6, 25): 1.2335215909071235,
    (6, 51): 0.6270634923308949,
    (6, 201): 0.44661866073711315,
}


def grid_cov(points, center=None):
    c = points.mean(axis=0) if center is None else center
    d = points - c
    return d.T @ d / len(points)


def test_norm_ppf_matches_reference():
    p = np.concatenate([np.logspace(-15, -1, 60), np.linspace(0.01, 0.99, 199),
                        1 - np.logspace(-12, -1, 50)])
    np.testing.assert_allclose(norm_ppf(p), norm.ppf(p), rtol=1e-12, atol=1e-12)


def test_norm_ppf_is_odd():
    # dyadic arguments so that 1 - p is exact
    p = np.arange(1, 512) / 1024
    np.testing.assert_array_equal(norm_ppf(p), -norm_ppf(1 - p))


def test_norm_ppf_domain():
    with pytest.raises(ValueError):
        norm_ppf(np.array([0.0, 0.5]))


def test_golden_ratios():
    assert generalized_golden_ratio(1) == pytest.approx((1 + np.sqrt(5)) / 2, rel=1e-15)
    # plastic number, real root of x^3 = x + 1
    assert generalized_golden_ratio(2) == pytest.approx(1.324717957244746, rel=1e-15)
    for d in range(1, 8):
        x = generalized_golden_ratio(d)
        assert x ** (d + 1) == pytest.approx(x + 1, rel=1e-14)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_single_point_grid_is_origin(n):
    g = standard_fib_grid(1, n)
    np.testing.assert_array_equal(g.points, np.zeros((1, n)))
    assert g.weight_each == 1.0


@pytest.mark.parametrize("M", [0, 2, 50, -3, 4.5])
def test_even_or_invalid_sizes_rejected(M):
    with pytest.raises(InvalidGridSize):
        standard_fib_grid(M, 2)


def test_five_point_layout():
    g = standard_fib_grid(5, 2)
    pts = g.points
    assert pts.shape == (5, 2)
    assert g.center_index == 2
    np.testing.assert_array_equal(pts[2], [0.0, 0.0])
    np.testing.assert_array_equal(pts[0], -pts[4])
    np.testing.assert_array_equal(pts[1], -pts[3])
    assert np.all(np.linalg.norm(np.delete(pts, 2, axis=0), axis=1) > 0)


@pytest.mark.parametrize("n", [1, 2, 3, 6])
@pytest.mark.parametrize("M", [3, 25, 51, 201])
def test_grid_structure(M, n):
    pts = standard_fib_grid(M, n).points
    K = M // 2
    np.testing.assert_array_equal(pts[K], np.zeros(n))
    for j in range(1, K + 1):
        np.testing.assert_array_equal(pts[K - j], -pts[K + j])
    assert np.linalg.norm(pts.mean(axis=0)) <= 1e-12
    assert np.trace(pts.T @ pts / M) == pytest.approx(n, rel=1e-14)
    diffs = np.linalg.norm(pts[:, None] - pts[None], axis=-1) + np.eye(M)
    assert np.all(diffs > 0)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_covariance_error_regression_and_monotone(n):
    errs = []
    for M in (25, 51, 201):
        pts = standard_fib_grid(M, n).points
        err = np.linalg.norm(grid_cov(pts) - np.eye(n))
        assert err == pytest.approx(FROBENIUS_BASELINE[n, M], rel=1e-9)
        errs.append(err)
    assert errs[0] > errs[1] > errs[2]


def test_fifty_one_point_grid_close_to_identity():
    pts = standard_fib_grid(51, 2).points
    assert np.linalg.norm(grid_cov(pts) - np.eye(2)) < 0.1


def test_grid_is_read_only_and_repeatable():
    a = standard_fib_grid(51, 3).points
    b = standard_fib_grid(51, 3).points
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        a[0, 0] = 1.0


def test_identity_component_is_shifted_standard_grid():
    mu = np.array([1.5, -2.0, 0.25])
    g = component_grid(Gaussian(mu, np.eye(3)), 25)
    np.testing.assert_allclose(g.points, standard_fib_grid(25, 3).points + mu, atol=1e-15)


def test_scalar_component_three_points():
    pts = component_grid(Gaussian([3.0], [[4.0]]), 3).points[:, 0]
    a = standard_fib_grid(3, 1).points[2, 0]
    assert a > 0
    np.testing.assert_allclose(pts, [3 - 2 * a, 3.0, 3 + 2 * a], atol=1e-15)
    # a scalar grid of three points reproduces the variance exactly
    assert np.mean((pts - 3.0) ** 2) == pytest.approx(4.0, rel=1e-14)


def test_component_covariance_error_follows_affine_map(rng):
    S = random_spd(rng, 3)
    mu = rng.standard_normal(3)
    L = np.linalg.cholesky(S)
    pts = component_grid(Gaussian(mu, S), 51).points
    std = standard_fib_grid(51, 3).points
    np.testing.assert_allclose(grid_cov(pts, mu), L @ grid_cov(std, 0) @ L.T, atol=1e-12)
    np.testing.assert_array_equal(pts[25], mu)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 40).map(lambda k: 2 * k + 1), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_component_grid_symmetric_about_mean(M, n, seed):
    rng = np.random.default_rng(seed)
    S = random_spd(rng, n)
    mu = rng.normal(0, 10, n)
    pts = component_grid(Gaussian(mu, S), M).points
    K = M // 2
    np.testing.assert_array_equal(pts[K], mu)
    if M == 1:
        return
    tol = 1e-11 * (1 + np.abs(pts).max())
    assert np.max(np.abs(pts[:K][::-1] + pts[K + 1:] - 2 * mu)) <= tol
    assert np.linalg.norm(pts.mean(axis=0) - mu) <= tol


def test_gmm_grid_single_point():
    c = gmm_grid(GaussianMixture([[2.0, 1.0]], [np.eye(2)], [1.0]), 1)
    np.testing.assert_array_equal(c.points, [[2.0, 1.0]])
    np.testing.assert_array_equal(c.weights, [1.0])


def test_gmm_grid_ordering():
    m = GaussianMixture([[0.0, 0.0], [5.0, 5.0]], np.eye(2), [0.5, 0.5])
    c = gmm_grid(m, 3)
    assert c.points.shape == (6, 2)
    np.testing.assert_allclose(c.weights, np.full(6, 1 / 6))
    np.testing.assert_array_equal(c.points[:2], m.means)
    np.testing.assert_array_equal(c.component_index, [0, 1, 0, 0, 1, 1])
    np.testing.assert_array_equal(c.grid_index, [1, 1, 0, 2, 0, 2])


def test_pineapple_collection_weights():
    m = pineapple_gmm()
    c = gmm_grid(m, 51)
    assert c.points.shape == (357, 2)
    assert np.sum(np.isclose(c.weights, 0.4 / 51, rtol=1e-15)) == 51
    assert np.sum(np.isclose(c.weights, 0.1 / 51, rtol=1e-15)) == 306
    assert abs(c.weights.sum() - 1.0) <= 1e-12
    np.testing.assert_array_equal(c.points[:7], m.means)
