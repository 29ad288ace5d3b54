"""
Resampling a seven-lobed mixture
================================

Draw seven equally weighted points from a seven-component mixture. Random
sampling tends to pile several points into the heavy base lobe. The
transport-based scheme is deterministic: it grids every component and moves
that mass onto seven targets as cheaply as possible.
"""

import numpy as np

from filterlab import GaussianMixture, deterministic_resample, keyed_rng, stochastic_resample
from filterlab.models import pineapple_gmm


def nearest(points, m):
    return np.argmin(((points[:, None] - m.means[None]) ** 2).sum(-1), axis=1)


m = pineapple_gmm()
print("weights", m.weights)

# the same seed always gives the same stochastic draw
rand = stochastic_resample(m, 7, keyed_rng(7, 0, 3))
print("stochastic lobes   ", sorted(nearest(rand, m).tolist()))

det = deterministic_resample(m, M=51)
print("deterministic lobes", sorted(nearest(det, m).tolist()))

# The base lobe carries 0.4 of the mass but each output point only 1/7, so
# transport has to spread it over about three targets and two lobes lose
# their point. With equal weights every lobe keeps exactly one.
flat = GaussianMixture(m.means, m.covs, np.full(7, 1 / 7))
print("equal-weight lobes ", sorted(nearest(deterministic_resample(flat, M=51), m).tolist()))

# both schemes keep the mixture mean
print("mixture mean      ", m.weights @ m.means)
print("deterministic mean", det.mean(axis=0))
