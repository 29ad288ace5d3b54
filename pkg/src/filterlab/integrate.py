"""Adaptive Dormand-Prince 5(4) integration with PI step-size control.

States may be a single vector of shape ``(n,)`` or a batch ``(..., n)``; a
batch is advanced with one shared step sequence and a step is accepted only
when every member meets the tolerance. Right-hand sides are called as
``rhs(t, y)`` and must accept the same shapes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StiffnessFailure

# Dormand & Prince (1980), FSAL tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

# Hairer's DOPRI5 controller constants
_SAFE = 0.9
_BETA = 0.04
_EXPO = 0.2 - 0.75 * _BETA
_FAC_MIN = 0.2
_FAC_MAX = 10.0


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("integrator tolerances must be positive")


def _norm(x):
    """RMS over the state axis, worst case over any batch axes."""
    rms = np.sqrt(np.mean(x * x, axis=-1))
    return float(np.max(rms))


def _initial_step(rhs, t0, y0, f0, span, cfg):
    sk = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0, d1 = _norm(y0 / sk), _norm(f0 / sk)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    f1 = rhs(t0 + h0, y0 + h0 * f0)
    d2 = _norm((f1 - f0) / sk) / h0
    big = max(d1, d2)
    h1 = max(1e-6, h0 * 1e-3) if big <= 1e-15 else (0.01 / big) ** 0.2
    return min(100 * h0, h1, cfg.max_step, span)


def dp45_steps(rhs, y0, t0, t1, cfg=IntegratorConfig()):
    """Yield ``(t, y)`` after every accepted step, ending exactly at ``t1``."""
    y = np.array(y0, dtype=float)
    if t1 < t0:
        raise ValueError("integration runs forward in time only")
    span = t1 - t0
    if span == 0:
        return
    h_min = 1e-14 * span
    t = t0
    f = rhs(t, y)
    h = _initial_step(rhs, t0, y, f, span, cfg)
    fac_old = 1e-4
    rejected = False
    for _ in range(cfg.max_steps):
        last = t + h >= t1 - h_min
        if last:
            h = t1 - t
        k = [f]
        for s in range(1, 7):
            a = _A[s]
            incr = a[0] * k[0]
            for m in range(1, s):
                if a[m]:
                    incr = incr + a[m] * k[m]
            ys = y + h * incr
            if s == 6:
                y_new = ys
            k.append(rhs(t + _C[s] * h, ys))
        err_vec = _E[0] * k[0]
        for m in range(2, 7):
            err_vec = err_vec + _E[m] * k[m]
        sk = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _norm(h * err_vec / sk)
        if not np.isfinite(err):
            err = 1e10
        fac11 = err**_EXPO
        if err <= 1.0:
            fac = fac11 / fac_old**_BETA
            fac = min(1 / _FAC_MIN, max(1 / _FAC_MAX, fac / _SAFE))
            h_new = h / fac
            fac_old = max(err, 1e-4)
            t = t1 if last else t + h
            y, f = y_new, k[6]
            yield t, y
            if last:
                return
            if rejected:
                h_new = min(h_new, h)
            rejected = False
            h = min(h_new, cfg.max_step)
        else:
            h = h / min(1 / _FAC_MIN, fac11 / _SAFE)
            rejected = True
            if h < h_min:
                raise StiffnessFailure(f"step size {h:.3e} underflowed at t={t:.17g}")
    raise StiffnessFailure(f"exceeded {cfg.max_steps} steps before t={t1!r}")


def integrate(rhs, y0, t0, t1, cfg=IntegratorConfig()):
    """State at ``t1`` starting from ``y0`` at ``t0``."""
    y = np.array(y0, dtype=float)
    for _, y in dp45_steps(rhs, y, t0, t1, cfg):
        pass
    return y


def propagate_to_event(rhs, y0, t0, t_max, g, direction, cfg=IntegratorConfig(), t_tol=1e-3):
    """Integrate until the scalar ``g(y)`` crosses zero in ``direction``.

    ``direction`` is ``+1`` for a rising crossing and ``-1`` for a falling
    one. The crossing is bracketed between accepted steps and refined by
    bisection (re-integrating from the bracket start) to ``t_tol``.

    Returns
    -------
    t, y, found : float, ndarray, bool
        ``found`` is False when no crossing occurs before ``t_max``; ``t`` and
        ``y`` are then the state at ``t_max``.
    """
    t_prev, y_prev = t0, np.array(y0, dtype=float)
    g_prev = g(y_prev)
    for t, y in dp45_steps(rhs, y_prev, t0, t_max, cfg):
        g_now = g(y)
        if direction * g_prev < 0 <= direction * g_now:
            lo, y_lo, hi = t_prev, y_prev, t
            while hi - lo > t_tol:
                mid = 0.5 * (lo + hi)
                y_mid = integrate(rhs, y_lo, lo, mid, cfg)
                if direction * g(y_mid) < 0:
                    lo, y_lo = mid, y_mid
                else:
                    hi = mid
            return hi, integrate(rhs, y_lo, lo, hi, cfg), True
        t_prev, y_prev, g_prev = t, y, g_now
    return t_prev, y_prev, False
