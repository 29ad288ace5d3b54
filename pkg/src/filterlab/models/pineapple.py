"""A seven-lobed two-dimensional Gaussian mixture for resampling demos."""

import numpy as np

from ..gmm import GaussianMixture

PINEAPPLE_MEANS = np.array([
    [0.0, 0.0],
    [1.0, 3.0],
    [-1.0, 3.0],
    [0.75, 5.0],
    [-0.75, 5.0],
    [0.5, 6.5],
    [-0.5, 6.5],
])


def pineapple_gmm():
    """A wide base component (weight 0.4) under six tilted, shrinking lobes.

    Lobe ``i = 2..7`` has covariance ``[[0.75, s], [s, 0.75]] / (i // 2 + 1)``
    with ``s = 0.5 * (-1)**i``, so the lobes lean alternately left and right.
    """
    covs = [np.array([[1.0, 0.0], [0.0, 1.5]])]
    for i in range(2, 8):
        s = 0.5 * (-1) ** i
        covs.append(np.array([[0.75, s], [s, 0.75]]) / (i // 2 + 1))
    weights = np.array([0.4] + [0.1] * 6)
    return GaussianMixture(PINEAPPLE_MEANS.copy(), np.array(covs), weights)
