import numpy as np
import pytest
from scipy.integrate import solve_ivp

from filterlab.errors import StiffnessFailure
from filterlab.integrate import IntegratorConfig, dp45_steps, integrate, propagate_to_event
from filterlab.models import lorenz63_rhs


def rk4_fixed(f, y, t0, t1, h):
    n = int(round((t1 - t0) / h))
    h = (t1 - t0) / n
    t = t0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return y


def oscillator(t, y):
    return np.stack([y[..., 1], -y[..., 0]], axis=-1)


def test_exponential():
    y = integrate(lambda t, y: y, np.array([1.0]), 0.0, 1.0, IntegratorConfig(rel_tol=1e-10))
    assert y[0] == pytest.approx(np.e, abs=1e-8)


def test_zero_span_returns_input():
    y0 = np.array([1.0, 2.0, 3.0])
    np.testing.assert_array_equal(integrate(lorenz63_rhs, y0, 0.5, 0.5), y0)


def test_backward_span_rejected():
    with pytest.raises(ValueError):
        integrate(lorenz63_rhs, np.ones(3), 1.0, 0.0)


def test_lorenz_interval_matches_fine_rk4():
    y0 = np.ones(3)
    got = integrate(lorenz63_rhs, y0, 0.0, 0.12, IntegratorConfig(rel_tol=1e-10, abs_tol=1e-12))
    ref = rk4_fixed(lorenz63_rhs, y0, 0.0, 0.12, 1e-5)
    np.testing.assert_allclose(got, ref, rtol=1e-6)


def test_oscillator_ten_periods_against_reference():
    y0 = np.array([1.0, 0.0])
    got = integrate(oscillator, y0, 0.0, 20 * np.pi, IntegratorConfig(rel_tol=1e-11, abs_tol=1e-12))
    ref = solve_ivp(oscillator, (0, 20 * np.pi), y0, method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
    np.testing.assert_allclose(got, ref, atol=1e-7)
    np.testing.assert_allclose(got, [1.0, 0.0], atol=1e-7)


def test_time_dependent_rhs():
    # y' = cos t, y(0) = 0 -> sin t
    y = integrate(lambda t, y: np.cos(t) * np.ones_like(y), np.zeros(1), 0.0, 2.0,
                  IntegratorConfig(rel_tol=1e-11, abs_tol=1e-13))
    assert y[0] == pytest.approx(np.sin(2.0), abs=1e-10)


def test_batch_matches_individual_runs():
    rng = np.random.default_rng(1)
    X = rng.normal(0, 5, (6, 3)) + [0, 0, 25]
    cfg = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-10)
    batch = integrate(lorenz63_rhs, X, 0.0, 0.12, cfg)
    single = np.array([integrate(lorenz63_rhs, x, 0.0, 0.12, cfg) for x in X])
    np.testing.assert_allclose(batch, single, rtol=1e-7, atol=1e-7)


def test_steps_end_exactly_at_target():
    ts = [t for t, _ in dp45_steps(oscillator, np.array([1.0, 0.0]), 0.0, 1.7)]
    assert ts[-1] == 1.7
    assert all(a < b for a, b in zip(ts, ts[1:]))


def test_repeat_runs_bit_identical():
    a = integrate(lorenz63_rhs, np.array([1.0, 2.0, 3.0]), 0.0, 5.0)
    b = integrate(lorenz63_rhs, np.array([1.0, 2.0, 3.0]), 0.0, 5.0)
    assert a.tobytes() == b.tobytes()


def test_max_step_respected():
    ts = [0.0] + [t for t, _ in dp45_steps(lambda t, y: 0 * y, np.ones(1), 0.0, 1.0,
                                            IntegratorConfig(max_step=0.1))]
    assert np.max(np.diff(ts)) <= 0.1 + 1e-15


def test_blow_up_raises_stiffness_failure():
    # y' = y^2 from y = 1 escapes to infinity at t = 1
    with pytest.raises(StiffnessFailure):
        integrate(lambda t, y: y * y, np.ones(1), 0.0, 2.0)


def test_bad_tolerances():
    with pytest.raises(ValueError):
        IntegratorConfig(rel_tol=0.0)


def test_event_falling_and_rising():
    cfg = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-12)
    g = lambda y: y[0]
    t, y, found = propagate_to_event(oscillator, np.array([1.0, 0.0]), 0.0, 10.0, g, -1, cfg, 1e-6)
    assert found
    assert t == pytest.approx(np.pi / 2, abs=1e-6)
    t, y, found = propagate_to_event(oscillator, np.array([1.0, 0.0]), 0.0, 10.0, g, +1, cfg, 1e-6)
    assert t == pytest.approx(3 * np.pi / 2, abs=1e-6)
    assert y[0] >= 0


def test_event_not_found():
    t, y, found = propagate_to_event(oscillator, np.array([1.0, 0.0]), 0.0, 1.0, lambda y: y[0], -1)
    assert not found
    assert t == 1.0
    np.testing.assert_allclose(y, [np.cos(1.0), -np.sin(1.0)], atol=1e-8)
