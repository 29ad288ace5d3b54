"""
Deterministic Gaussian grids
============================

A Fibonacci-lattice grid stands in for random draws from a Gaussian. Each
grid is symmetric about the mean, so its sample mean is exact, and its
covariance gets closer to the target as points are added.
"""

import numpy as np

from filterlab import gmm_grid, standard_fib_grid
from filterlab.models import pineapple_gmm

# five points in the plane: the origin plus two antipodal pairs
grid = standard_fib_grid(5, 2)
print(grid.points)

# covariance error shrinks with the number of points
for n in (2, 3, 6):
    for M in (25, 51, 201):
        pts = standard_fib_grid(M, n).points
        cov = pts.T @ pts / M
        print(f"n={n} M={M:4d}  |cov - I|_F = {np.linalg.norm(cov - np.eye(n)):.4f}")

# a mixture gets one affine copy of the grid per component; the first rows are the means
coll = gmm_grid(pineapple_gmm(), 51)
print(coll.points.shape, coll.weights.sum())
print(coll.points[:7])
