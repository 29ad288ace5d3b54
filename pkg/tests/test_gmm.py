import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import integrate
from scipy.stats import multivariate_normal

from filterlab.errors import CholeskyFailure
from filterlab.gmm import (Gaussian, GaussianMixture, gaussian_logpdf, mixture_moments,
                           sample_mean_cov)
from filterlab.models import pineapple_gmm

from conftest import random_spd


def test_logpdf_standard_normal_mode():
    assert gaussian_logpdf(Gaussian([0.0], [[1.0]]), np.array([0.0])) == pytest.approx(
        -0.5 * np.log(2 * np.pi), abs=1e-15)


def test_logpdf_at_mean_is_normaliser(rng):
    S = random_spd(rng, 4)
    mu = rng.standard_normal(4)
    expected = -0.5 * np.log((2 * np.pi) ** 4 * np.linalg.det(S))
    assert gaussian_logpdf(Gaussian(mu, S), mu) == pytest.approx(expected, rel=1e-12)


def test_logpdf_hand_value():
    # -0.5 * 25 - ln(2 pi)
    assert gaussian_logpdf(Gaussian([0.0, 0.0], np.eye(2)), np.array([3.0, 4.0])) == pytest.approx(
        -14.337877066409346, abs=1e-12)


def test_logpdf_matches_scipy_on_stacks(rng):
    S = random_spd(rng, 3)
    mu = rng.standard_normal(3)
    X = rng.standard_normal((20, 3))
    np.testing.assert_allclose(gaussian_logpdf(Gaussian(mu, S), X),
                               multivariate_normal(mu, S).logpdf(X), rtol=1e-12)


def test_logpdf_rejects_indefinite_covariance():
    with pytest.raises(CholeskyFailure):
        gaussian_logpdf(Gaussian([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]]), np.zeros(2))


def test_cholesky_failure_names_component():
    m = GaussianMixture([[0.0], [1.0]], [[[1.0]], [[-1.0]]], [0.5, 0.5])
    from filterlab.fibgrid import gmm_grid
    with pytest.raises(CholeskyFailure) as info:
        gmm_grid(m, 3)
    assert info.value.component == 1


@pytest.mark.parametrize("mu,var", [(0.0, 1.0), (2.5, 0.3), (-1.0, 7.0)])
def test_density_integrates_to_one_1d(mu, var):
    g = Gaussian([mu], [[var]])
    total, _ = integrate.quad(lambda x: np.exp(gaussian_logpdf(g, np.array([x]))), -np.inf, np.inf)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_density_integrates_to_one_2d():
    g = Gaussian([0.5, -0.2], [[1.0, 0.3], [0.3, 0.5]])
    xs = np.linspace(-8, 9, 341)
    ys = np.linspace(-7, 7, 281)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    dens = np.exp(gaussian_logpdf(g, np.stack([X, Y], axis=-1)))
    total = integrate.trapezoid(integrate.trapezoid(dens, ys, axis=1), xs)
    assert total == pytest.approx(1.0, abs=1e-3)


def test_sample_mean_cov_identical_members():
    mean, cov = sample_mean_cov(np.array([[1.0, 2.0], [1.0, 2.0]]))
    np.testing.assert_array_equal(mean, [1.0, 2.0])
    np.testing.assert_array_equal(cov, np.zeros((2, 2)))


def test_sample_mean_cov_divisor():
    mean, cov = sample_mean_cov(np.array([[0.0], [2.0]]))
    assert mean[0] == 1.0
    assert cov[0, 0] == 2.0


def test_sample_mean_cov_single_member():
    _, cov = sample_mean_cov(np.array([[3.0, 4.0]]))
    np.testing.assert_array_equal(cov, np.zeros((2, 2)))


def test_sample_mean_cov_matches_numpy(rng):
    X = rng.standard_normal((15, 4))
    mean, cov = sample_mean_cov(X)
    np.testing.assert_allclose(mean, X.mean(axis=0), atol=1e-15)
    np.testing.assert_allclose(cov, np.cov(X.T), atol=1e-14)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 4)),
              elements=st.floats(-1e3, 1e3)), st.randoms())
def test_sample_mean_cov_permutation_and_psd(X, rnd):
    order = list(range(X.shape[0]))
    rnd.shuffle(order)
    m1, c1 = sample_mean_cov(X)
    m2, c2 = sample_mean_cov(X[order])
    scale = 1.0 + np.max(np.abs(X)) ** 2
    np.testing.assert_allclose(m1, m2, atol=1e-12 * (1 + np.max(np.abs(X))))
    np.testing.assert_allclose(c1, c2, atol=1e-12 * scale)
    np.testing.assert_array_equal(c1, c1.T)
    assert np.min(np.linalg.eigvalsh(c1)) >= -1e-9 * scale


def test_mixture_moments_single_component(rng):
    S = random_spd(rng, 3)
    mu = rng.standard_normal(3)
    mean, cov = mixture_moments(GaussianMixture([mu], [S], [1.0]))
    np.testing.assert_allclose(mean, mu)
    np.testing.assert_allclose(cov, S, rtol=1e-14)


def test_mixture_moments_total_variance():
    m = GaussianMixture([[-1.0], [1.0]], np.zeros((2, 1, 1)), [0.5, 0.5])
    mean, cov = mixture_moments(m)
    assert mean[0] == 0.0
    assert cov[0, 0] == 1.0


def test_mixture_moments_permutation_invariant():
    m = pineapple_gmm()
    order = [3, 0, 6, 1, 5, 2, 4]
    a, A = mixture_moments(m)
    b, B = mixture_moments(m.permuted(order))
    np.testing.assert_allclose(a, b, atol=1e-15)
    np.testing.assert_allclose(A, B, atol=1e-14)


def test_mixture_moments_pineapple_monte_carlo():
    m = pineapple_gmm()
    gen = np.random.default_rng(5)
    n = 10**6
    comp = gen.choice(len(m), size=n, p=m.weights)
    z = gen.standard_normal((n, 2))
    L = np.linalg.cholesky(m.covs)
    X = m.means[comp] + np.einsum("kij,kj->ki", L[comp], z)
    mean, cov = mixture_moments(m)
    se = np.sqrt(np.diag(cov) / n)
    assert np.all(np.abs(X.mean(axis=0) - mean) < 3 * se)
    # standard error of a sample (co)variance entry, from fourth moments
    C = X - X.mean(axis=0)
    emp = C.T @ C / (n - 1)
    prods = np.stack([C[:, 0] ** 2, C[:, 0] * C[:, 1], C[:, 1] ** 2])
    se_cov = prods.std(axis=1) / np.sqrt(n)
    got = np.array([emp[0, 0], emp[0, 1], emp[1, 1]])
    want = np.array([cov[0, 0], cov[0, 1], cov[1, 1]])
    assert np.all(np.abs(got - want) < 3 * se_cov)


def test_mixture_rejects_bad_weights():
    with pytest.raises(ValueError):
        GaussianMixture([[0.0], [1.0]], np.ones((2, 1, 1)), [0.5, 0.6])
    with pytest.raises(ValueError):
        GaussianMixture([[0.0], [1.0]], np.ones((2, 1, 1)), [1.5, -0.5])


def test_mixture_broadcasts_shared_covariance():
    m = GaussianMixture(np.zeros((3, 2)), np.eye(2), np.full(3, 1 / 3))
    assert m.covs.shape == (3, 2, 2)
    assert len(m) == 3 and m.dim == 2
