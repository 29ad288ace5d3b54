"""Lunar near-rectilinear halo orbit tracking scenario.

States are ``(x, y, z, vx, vy, vz)`` in a Moon-centred inertial frame whose
axes coincide with the rotating Earth-Moon frame at ``t = 0``. The Moon is a
point mass; the Earth is a point mass on a circular orbit in the xy-plane,
entering through the usual direct plus indirect third-body terms. This is
the circular restricted three-body problem written about the Moon.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ImpactDetected, StationKeepingFailure
from ..gaussian_sum import MeasurementModel
from ..integrate import IntegratorConfig, integrate
from .constants import load_constants

ARCSEC = np.pi / (180.0 * 3600.0)
DAY = 86400.0

# tight enough that truth shooting residuals sit far below the 1 m target
TRUTH_INTEGRATOR = IntegratorConfig(rel_tol=1e-11, abs_tol=1e-8)
FILTER_INTEGRATOR = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-6)


@dataclass(frozen=True)
class NrhoConfig:
    moon_gm: float
    earth_gm: float
    earth_moon_distance: float
    moon_radius: float
    initial_state: np.ndarray
    period: float
    P0: np.ndarray
    R: np.ndarray
    Q: np.ndarray = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "initial_state", np.asarray(self.initial_state, dtype=float))
        if self.Q is None:
            object.__setattr__(self, "Q", np.asarray(self.P0) / 4.0)

    @property
    def earth_rate(self):
        """Angular rate of the circular Earth-Moon orbit, rad/s."""
        return np.sqrt((self.earth_gm + self.moon_gm) / self.earth_moon_distance**3)

    @classmethod
    def from_constants(cls, initial="table", consts=None):
        """Build the scenario from the constants file.

        ``initial="table"`` takes the tabulated default state verbatim;
        ``initial="halo"`` takes the bundled 7.38-day halo orbit.
        """
        c = load_constants() if consts is None else consts
        if initial not in ("table", "halo"):
            raise ValueError(f"unknown initial state {initial!r}")
        ang = (c["angle_sigma_arcsec"] * ARCSEC) ** 2
        period_days = c["halo_period_days"] if initial == "halo" else c["orbit_period_days"]
        return cls(
            moon_gm=c["moon_gm"],
            earth_gm=c["earth_gm"],
            earth_moon_distance=c["earth_moon_distance"],
            moon_radius=c["moon_radius"],
            initial_state=c[f"initial_state_{initial}"],
            period=period_days * DAY,
            P0=np.diag(c["initial_cov_diag"]),
            R=np.diag([c["range_var"], c["range_rate_var"], ang, ang]),
        )


def earth_position(t, cfg):
    """Earth relative to the Moon; on the -x axis at ``t = 0``."""
    wt = cfg.earth_rate * t
    return -cfg.earth_moon_distance * np.array([np.cos(wt), np.sin(wt), 0.0])


def rotate_z(angle, v):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]])


def third_body_accel(r, r_E, gm):
    """Direct minus indirect (frame) acceleration of a third body at ``r_E``."""
    d = r - r_E
    dn = np.linalg.norm(d, axis=-1, keepdims=True)
    return -gm * (d / dn**3 + r_E / np.linalg.norm(r_E) ** 3)


def nrho_rhs(t, s, cfg):
    """Time derivative of one state ``(6,)`` or a batch ``(..., 6)``.

    Raises
    ------
    ImpactDetected
        If any position lies inside the lunar radius.
    """
    r, v = s[..., :3], s[..., 3:]
    rn = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(rn < cfg.moon_radius):
        raise ImpactDetected(f"trajectory passed {float(np.min(rn)):.1f} m from the lunar centre")
    acc = -cfg.moon_gm * r / rn**3
    if cfg.earth_gm:
        acc = acc + third_body_accel(r, earth_position(t, cfg), cfg.earth_gm)
    return np.concatenate([v, acc], axis=-1)


def radial_rate(s):
    """``r . v``: negative inbound, positive outbound."""
    return float(np.dot(s[:3], s[3:6]))


def wrap_angle(a):
    """Map angles onto ``(-pi, pi]``."""
    return np.pi - np.mod(np.pi - np.asarray(a, dtype=float), 2.0 * np.pi)


def _wrapped_residual(y, yhat):
    d = np.asarray(y, dtype=float) - yhat
    d[2] = wrap_angle(d[2])
    return d


def nrho_measurement(cfg):
    """Range, range rate, azimuth and elevation seen from the lunar north pole.

    With ``p = (x, y, z - r_moon)``: ``h = (|p|, p.v/|p|, atan2(y, x),
    atan((z - r_moon)/|p|))``. Azimuth innovations are wrapped.
    """
    pole = np.array([0.0, 0.0, cfg.moon_radius])

    def h(s):
        p, v = s[:3] - pole, s[3:6]
        r = np.linalg.norm(p)
        return np.array([r, p @ v / r, np.arctan2(p[1], p[0]), np.arctan(p[2] / r)])

    def jac(s):
        p, v = s[:3] - pole, s[3:6]
        r = np.linalg.norm(p)
        J = np.zeros((4, 6))
        J[0, :3] = p / r
        J[1, :3] = v / r - (p @ v) * p / r**3
        J[1, 3:] = p / r
        rho2 = p[0] ** 2 + p[1] ** 2
        if rho2 > 0:
            J[2, 0] = -p[1] / rho2
            J[2, 1] = p[0] / rho2
        u = p[2] / r
        du = -p[2] * p / r**3
        du[2] += 1.0 / r
        J[3, :3] = du / (1.0 + u * u)
        return J

    return MeasurementModel(h, jac, cfg.R, _wrapped_residual)


def reference_position(t, cfg):
    """Initial position carried along with the Earth-Moon rotation to time ``t``."""
    return rotate_z(cfg.earth_rate * t, cfg.initial_state[:3])


def station_keeping_truth(s, target, period, cfg, t0=0.0, icfg=TRUTH_INTEGRATOR,
                          tol=1.0, max_iter=20, dv=1e-4):
    """Retarget the velocity so the state reaches ``target`` after ``period``.

    Single shooting: Newton iterations on the velocity with a central
    finite-difference sensitivity (step ``dv`` m/s) until the propagated
    position lies within ``tol`` metres of ``target``.

    Raises
    ------
    StationKeepingFailure
        If ``max_iter`` Newton steps do not converge.
    """
    s = np.array(s, dtype=float)
    target = np.asarray(target, dtype=float)
    t1 = t0 + period

    def miss(state):
        return integrate(lambda t, y: nrho_rhs(t, y, cfg), state, t0, t1, icfg)[:3] - target

    for _ in range(max_iter + 1):
        F = miss(s)
        if np.linalg.norm(F) <= tol:
            return s
        J = np.empty((3, 3))
        for k in range(3):
            hi, lo = s.copy(), s.copy()
            hi[3 + k] += dv
            lo[3 + k] -= dv
            J[:, k] = (miss(hi) - miss(lo)) / (2 * dv)
        s[3:] -= np.linalg.solve(J, F)
    raise StationKeepingFailure(
        f"velocity correction missed the target by {np.linalg.norm(miss(s)):.3f} m "
        f"after {max_iter} iterations"
    )
