"""Lorenz '63 dynamics and the range-to-wing-centre measurement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gaussian_sum import MeasurementModel


@dataclass(frozen=True)
class Lorenz63Params:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    dt: float = 0.12
    meas_var: float = 1.0
    # drop the "- y" damping term of the second equation
    drop_y_term: bool = False

    @property
    def station(self):
        """Wing centre ``(sqrt(b(r-1)), sqrt(b(r-1)), r-1)``, a fixed point."""
        a = np.sqrt(self.beta * (self.rho - 1.0))
        return np.array([a, a, self.rho - 1.0])


def lorenz63_rhs(t, s, p=Lorenz63Params()):
    """Time derivative of one state ``(3,)`` or a batch ``(..., 3)``."""
    x, y, z = s[..., 0], s[..., 1], s[..., 2]
    out = np.empty(np.shape(s))
    out[..., 0] = p.sigma * (y - x)
    out[..., 1] = x * (p.rho - z) if p.drop_y_term else x * (p.rho - z) - y
    out[..., 2] = x * y - p.beta * z
    return out


def lorenz_range_measurement(p=Lorenz63Params()):
    """Distance from the wing centre with variance ``p.meas_var``.

    At the centre itself the gradient is undefined; the Jacobian then returns
    the unit x-axis so callers never see NaN.
    """
    c = p.station

    def h(s):
        return np.array([np.linalg.norm(np.asarray(s) - c)])

    def jac(s):
        d = np.asarray(s, dtype=float) - c
        r = np.linalg.norm(d)
        if r == 0.0:
            return np.array([[1.0, 0.0, 0.0]])
        return (d / r)[None, :]

    return MeasurementModel(h, jac, np.array([[p.meas_var]]))
