import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_spd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * (A @ A.T + n * np.eye(n))


def central_jacobian(f, x, rel_step=1e-6):
    """Central differences with steps scaled to each coordinate's magnitude."""
    x = np.asarray(x, dtype=float)
    steps = rel_step * np.maximum(1.0, np.abs(x))
    cols = []
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = steps[k]
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * steps[k]))
    return np.array(cols).T, steps


def jacobian_mismatch(J, J_fd, scale):
    """Largest row-relative discrepancy after scaling columns to unit steps."""
    A, B = J * scale, J_fd * scale
    ref = np.maximum(np.max(np.abs(A), axis=1, keepdims=True), 1e-300)
    return float(np.max(np.abs(A - B) / ref))
