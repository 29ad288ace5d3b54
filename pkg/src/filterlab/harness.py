"""Monte Carlo twin experiments and their CSV outputs.

Every random draw comes from a keyed stream ``(seed, trial, purpose, ...)``,
so a result never depends on execution order or on how trials are spread
over worker processes. Floats are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ConfigError, FilterLabError, StationKeepingFailure
from .filters import UkfParams, engmf_step, lorenz_defensive_factor, pineapple_step, ukf_step
from .gmm import Gaussian
from .integrate import IntegratorConfig, integrate, propagate_to_event
from .models.constants import parse_key_values
from .models.lorenz import Lorenz63Params, lorenz63_rhs, lorenz_range_measurement
from .models.nrho import (FILTER_INTEGRATOR, TRUTH_INTEGRATOR, NrhoConfig, nrho_measurement,
                          nrho_rhs, radial_rate, reference_position, station_keeping_truth)
from .models.pineapple import pineapple_gmm
from .resampling import deterministic_resample, keyed_rng, stochastic_resample

log = logging.getLogger(__name__)

LORENZ_FILTERS = ("pineapple", "engmf", "free")
NRHO_FILTERS = ("pineapple", "engmf", "ukf")
COLUMN_NAMES = {"pineapple": "Pineapple", "engmf": "EnGMF", "free": "Free", "ukf": "UKF"}
LORENZ_INTEGRATOR = IntegratorConfig(rel_tol=1e-9, abs_tol=1e-9)


class Stream(IntEnum):
    TRUTH = 0
    MEASUREMENT = 1
    ENSEMBLE = 2
    RESAMPLE = 3


def fmt(x):
    return f"{x:.17g}"


def spatio_temporal_rmse(estimates, truth, spinup=0):
    """RMSE over time steps after ``spinup`` and over state components."""
    E = np.atleast_2d(np.asarray(estimates, dtype=float))
    X = np.atleast_2d(np.asarray(truth, dtype=float))
    if E.shape != X.shape:
        raise ValueError(f"estimate shape {E.shape} != truth shape {X.shape}")
    if E.shape[0] <= spinup:
        raise ValueError(f"need more than {spinup} steps, got {E.shape[0]}")
    d = E[spinup:] - X[spinup:]
    return float(np.sqrt(np.mean(d * d)))


def summarize(values):
    """Mean and 3 x sample standard deviation, ignoring NaN entries.

    Returns ``(mean, three_sigma, excluded)``.
    """
    v = np.asarray(values, dtype=float)
    ok = v[np.isfinite(v)]
    excluded = v.size - ok.size
    mean = float(ok.mean()) if ok.size else math.nan
    s3 = float(3.0 * ok.std(ddof=1)) if ok.size > 1 else math.nan
    return mean, s3, excluded


# configuration -------------------------------------------------------------


def _parse_list(value, cast):
    if isinstance(value, (list, tuple)):
        return tuple(cast(x) for x in value)
    return tuple(cast(x.strip()) for x in str(value).split(",") if x.strip())


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {value!r}")


def apply_overrides(cfg, values):
    """Return ``cfg`` with fields replaced by (string or typed) ``values``."""
    kinds = {f.name: f.type for f in fields(cfg)}
    changes = {}
    for key, raw in values.items():
        key = key.replace("-", "_")
        if key not in kinds:
            raise ConfigError(f"unknown setting {key!r}")
        kind = str(kinds[key])
        try:
            if "tuple[int" in kind:
                val = _parse_list(raw, int)
            elif "tuple[str" in kind:
                val = _parse_list(raw, str)
            elif kind == "bool":
                val = _parse_bool(raw)
            elif kind == "int":
                val = int(raw)
            elif kind == "float":
                val = float(raw)
            else:
                val = raw if raw is None else str(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        changes[key] = val
    out = replace(cfg, **changes)
    out.validate()
    return out


def load_config_file(path):
    """Flat ``key = value`` settings, ``#`` comments."""
    try:
        with open(path) as fh:
            return parse_key_values(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


@dataclass(frozen=True)
class LorenzExperiment:
    particles: tuple[int, ...] = (2, 4, 8, 12, 16)
    trials: int = 24
    steps: int = 220
    spinup: int = 20
    filters: tuple[str, ...] = ("pineapple", "engmf")
    seed: int = 7
    M: int = 51
    # "sqrt" gives 0.1 / sqrt(N); a number is used as a constant factor
    defensive: str = "sqrt"
    spin_in: int = 1000
    init_spread: float = 1.0
    drop_y_term: bool = False
    workers: int = 1
    out: str = "lorenz.csv"

    def validate(self):
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not 0 <= self.spinup < self.steps:
            raise ConfigError("spinup must be below steps")
        if not self.particles or min(self.particles) < 1:
            raise ConfigError("particle counts must be positive")
        if self.M < 1 or self.M % 2 == 0:
            raise ConfigError("M must be a positive odd integer")
        bad = set(self.filters) - set(LORENZ_FILTERS)
        if bad or not self.filters:
            raise ConfigError(f"unknown filters {sorted(bad)}; choose from {LORENZ_FILTERS}")
        defensive_factor(self.defensive, 1)

    @classmethod
    def paper_scale(cls, **kw):
        return cls(particles=tuple(range(2, 31, 2)), trials=192, **kw)


def defensive_factor(rule, N):
    if rule == "sqrt":
        return lorenz_defensive_factor(N)
    try:
        v = float(rule)
    except ValueError:
        raise ConfigError(f"defensive rule must be 'sqrt' or a number, got {rule!r}") from None
    if not 0 <= v < 1:
        raise ConfigError("defensive factor must lie in [0, 1)")
    return v


# Lorenz '63 ---------------------------------------------------------------


def lorenz_truth(cfg, trial):
    """Truth states after each interval and their noisy range measurements."""
    p = Lorenz63Params(drop_y_term=cfg.drop_y_term)
    rhs = lambda t, s: lorenz63_rhs(t, s, p)
    x = np.ones(3) + keyed_rng(cfg.seed, trial, Stream.TRUTH).standard_normal(3)
    for _ in range(cfg.spin_in):
        x = integrate(rhs, x, 0.0, p.dt, LORENZ_INTEGRATOR)
    x0 = x
    states = np.empty((cfg.steps, 3))
    for k in range(cfg.steps):
        x = integrate(rhs, x, 0.0, p.dt, LORENZ_INTEGRATOR)
        states[k] = x
    mm = lorenz_range_measurement(p)
    noise = keyed_rng(cfg.seed, trial, Stream.MEASUREMENT).standard_normal(cfg.steps)
    ys = np.array([mm.h(s)[0] for s in states]) + np.sqrt(p.meas_var) * noise
    return x0, states, ys


def _lorenz_trial(args):
    cfg, trial = args
    p = Lorenz63Params(drop_y_term=cfg.drop_y_term)
    rhs = lambda t, s: lorenz63_rhs(t, s, p)
    propagate = lambda X: integrate(rhs, X, 0.0, p.dt, LORENZ_INTEGRATOR)
    mm = lorenz_range_measurement(p)
    x0, truth, ys = lorenz_truth(cfg, trial)
    out = {}
    for N in cfg.particles:
        X0 = x0 + cfg.init_spread * keyed_rng(cfg.seed, trial, Stream.ENSEMBLE, N).standard_normal((N, 3))
        v = defensive_factor(cfg.defensive, N)
        for name in cfg.filters:
            X = X0.copy()
            est = np.empty_like(truth)
            try:
                for k in range(cfg.steps):
                    if name == "pineapple":
                        X = pineapple_step(X, propagate, mm, ys[k], None, v, cfg.M)
                    elif name == "engmf":
                        rng = keyed_rng(cfg.seed, trial, Stream.RESAMPLE, N, k)
                        X = engmf_step(X, propagate, mm, ys[k], None, v, rng)
                    else:
                        X = propagate(X)
                    est[k] = X.mean(axis=0)
                out[name, N] = (spatio_temporal_rmse(est, truth, cfg.spinup), None)
            except (FilterLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
                out[name, N] = (math.nan, f"trial {trial} filter {name} N={N}: {type(exc).__name__}: {exc}")
    return out


def _map_trials(fn, cfg, trials):
    jobs = [(cfg, t) for t in trials]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


@dataclass
class LorenzResult:
    particles: tuple
    filters: tuple
    rmse: dict  # (filter, N) -> per-trial array
    summary: dict  # (filter, N) -> (mean, three_sigma, excluded)
    messages: list = field(default_factory=list)

    @property
    def all_failed(self):
        return all(np.all(np.isnan(v)) for v in self.rmse.values())


def run_lorenz_experiment(cfg):
    """Run every (filter, N) over all trials and aggregate in trial order."""
    cfg.validate()
    per_trial = _map_trials(_lorenz_trial, cfg, range(cfg.trials))
    rmse, summary, messages = {}, {}, []
    for name in cfg.filters:
        for N in cfg.particles:
            vals = np.array([r[name, N][0] for r in per_trial])
            messages += [r[name, N][1] for r in per_trial if r[name, N][1]]
            rmse[name, N] = vals
            summary[name, N] = summarize(vals)
    return LorenzResult(tuple(cfg.particles), tuple(cfg.filters), rmse, summary, messages)


def write_lorenz_csv(result, path):
    """CSV with columns ``Ns, m<Filter>, s3<Filter>, ...`` plus a sidecar log.

    The sidecar (same stem, ``.log``) lists failed trials and how many NaN
    entries each aggregate excluded.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    order = [f for f in LORENZ_FILTERS if f in result.filters]
    header = ["Ns"]
    for f in order:
        header += [f"m{COLUMN_NAMES[f]}", f"s3{COLUMN_NAMES[f]}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for N in result.particles:
            row = [str(N)]
            for f in order:
                mean, s3, _ = result.summary[f, N]
                row += [fmt(mean), fmt(s3)]
            w.writerow(row)
    with open(path.with_suffix(".log"), "w") as fh:
        for f in order:
            for N in result.particles:
                fh.write(f"filter={f} N={N} excluded={result.summary[f, N][2]}\n")
        for msg in result.messages:
            fh.write(msg + "\n")
    return path


# NRHO ---------------------------------------------------------------------


@dataclass(frozen=True)
class NrhoExperiment:
    orbits: int = 20
    trials: int = 10
    particles: int = 30
    filters: tuple[str, ...] = ("pineapple", "engmf", "ukf")
    seed: int = 7
    M: int = 51
    defensive: float = 0.05
    initial: str = "table"
    workers: int = 1
    out: str = "nrho"

    def validate(self):
        if self.trials < 1 or self.orbits < 1 or self.particles < 2:
            raise ConfigError("trials and orbits must be >= 1 and particles >= 2")
        if self.M < 1 or self.M % 2 == 0:
            raise ConfigError("M must be a positive odd integer")
        bad = set(self.filters) - set(NRHO_FILTERS)
        if bad or not self.filters:
            raise ConfigError(f"unknown filters {sorted(bad)}; choose from {NRHO_FILTERS}")
        if self.initial not in ("table", "halo"):
            raise ConfigError("initial must be 'table' or 'halo'")
        if not 0 <= self.defensive < 1:
            raise ConfigError("defensive factor must lie in [0, 1)")


@dataclass
class NrhoTruth:
    epochs: np.ndarray  # measurement times
    states: np.ndarray  # true states at those times
    maneuvers: list  # (time, delta-v vector)
    apolune_radius: float
    notes: list


def nrho_truth(scenario, orbits, icfg=TRUTH_INTEGRATOR):
    """Station-kept truth with one perilune measurement epoch per orbit.

    Raises
    ------
    StationKeepingFailure
        When a velocity correction fails; the truth cannot be continued.
    """
    rhs = lambda t, s: nrho_rhs(t, s, scenario)
    T = scenario.period
    t, s = 0.0, scenario.initial_state.copy()
    apo = float(np.linalg.norm(s[:3]))
    epochs, states, maneuvers, notes = [], [], [], []
    for k in range(orbits):
        tp, sp, found = propagate_to_event(rhs, s, t, t + T, radial_rate, +1, icfg)
        if not found:
            notes.append(f"orbit {k}: no perilune within one period; measuring at t={fmt(tp)}")
        epochs.append(tp)
        states.append(sp)
        if k == orbits - 1:
            break
        ta, sa, found = propagate_to_event(rhs, sp, tp, tp + T, radial_rate, -1, icfg)
        if not found:
            notes.append(f"orbit {k}: no apolune after perilune; no maneuver")
            t, s = tp, sp
            continue
        apo = max(apo, float(np.linalg.norm(sa[:3])))
        t_next = (round(ta / T) + 1) * T
        target = reference_position(t_next, scenario)
        corrected = station_keeping_truth(sa, target, t_next - ta, scenario, t0=ta, icfg=icfg)
        maneuvers.append((ta, corrected[3:] - sa[3:]))
        t, s = ta, corrected
    return NrhoTruth(np.array(epochs), np.array(states), maneuvers, apo, notes)


def _nrho_trial(args):
    cfg, trial, truth = args
    sc = NrhoConfig.from_constants(cfg.initial)
    mm = nrho_measurement(sc)
    K = truth.epochs.size
    noise = keyed_rng(cfg.seed, trial, Stream.MEASUREMENT).standard_normal((K, mm.dim))
    ys = np.array([mm.h(s) for s in truth.states]) + noise @ np.linalg.cholesky(sc.R).T
    rng0 = keyed_rng(cfg.seed, trial, Stream.ENSEMBLE)
    L0 = np.linalg.cholesky(sc.P0)
    x_hat0 = sc.initial_state + L0 @ rng0.standard_normal(6)
    X0 = x_hat0 + rng0.standard_normal((cfg.particles, 6)) @ L0.T
    limit = 2.0 * truth.apolune_radius

    rows, events = {}, []
    for name in cfg.filters:
        errs = np.full((K, 2), math.nan)
        belief = Gaussian(x_hat0, sc.P0) if name == "ukf" else X0.copy()
        t_prev = 0.0
        for k in range(K):
            t_k = truth.epochs[k]
            propagate = (lambda X, a=t_prev, b=t_k:
                         integrate(lambda t, s: nrho_rhs(t, s, sc), X, a, b, FILTER_INTEGRATOR))
            try:
                if name == "ukf":
                    belief = ukf_step(belief, propagate, mm, ys[k], sc.Q, UkfParams())
                    est = belief.mean
                elif name == "pineapple":
                    belief = pineapple_step(belief, propagate, mm, ys[k], sc.Q, cfg.defensive, cfg.M)
                    est = belief.mean(axis=0)
                else:
                    rng = keyed_rng(cfg.seed, trial, Stream.RESAMPLE, k)
                    belief = engmf_step(belief, propagate, mm, ys[k], sc.Q, cfg.defensive, rng)
                    est = belief.mean(axis=0)
                if not np.all(np.isfinite(est)):
                    raise ArithmeticError("non-finite estimate")
            except (FilterLabError, ArithmeticError, np.linalg.LinAlgError) as exc:
                events.append(f"filter={name} trial={trial} epoch={k} event=divergence "
                              f"reason={type(exc).__name__}: {exc}")
                break
            errs[k, 0] = np.linalg.norm(est[:3] - truth.states[k, :3])
            errs[k, 1] = np.linalg.norm(est[3:] - truth.states[k, 3:])
            if np.linalg.norm(est[:3]) > limit:
                events.append(f"filter={name} trial={trial} epoch={k} event=escape "
                              f"radius={fmt(float(np.linalg.norm(est[:3])))}")
            t_prev = t_k
        rows[name] = errs
    return rows, events


@dataclass
class NrhoResult:
    truth: NrhoTruth
    errors: dict  # filter -> (trials, epochs, 2) position / velocity errors
    events: list

    @property
    def all_failed(self):
        return all(np.all(np.isnan(e[:, -1, 0])) for e in self.errors.values())


def run_nrho_experiment(cfg, truth=None):
    cfg.validate()
    if truth is None:
        truth = nrho_truth(NrhoConfig.from_constants(cfg.initial), cfg.orbits)
    jobs = [(cfg, t, truth) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            per_trial = list(pool.map(_nrho_trial, jobs))
    else:
        per_trial = [_nrho_trial(j) for j in jobs]
    errors = {name: np.array([r[0][name] for r in per_trial]) for name in cfg.filters}
    events = [e for r in per_trial for e in r[1]]
    return NrhoResult(truth, errors, events)


def write_nrho_outputs(result, out_dir):
    """``<filter>_errors.csv`` per filter, ``truth.csv``, ``events.log``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tr = result.truth
    for name, errs in result.errors.items():
        with open(out / f"{name}_errors.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "epoch", "time", "position_error", "velocity_error"])
            for trial in range(errs.shape[0]):
                for k in range(errs.shape[1]):
                    w.writerow([trial, k, fmt(tr.epochs[k]), fmt(errs[trial, k, 0]),
                                fmt(errs[trial, k, 1])])
    write_truth_csv(tr.epochs, tr.states, out / "truth.csv")
    with open(out / "events.log", "w") as fh:
        for note in tr.notes:
            fh.write(f"truth: {note}\n")
        for t, dv in tr.maneuvers:
            fh.write(f"truth: maneuver t={fmt(t)} dv={fmt(float(np.linalg.norm(dv)))}\n")
        for e in result.events:
            fh.write(e + "\n")
    return out


def write_truth_csv(times, states, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "x", "y", "z", "vx", "vy", "vz"])
        for t, s in zip(times, states):
            w.writerow([fmt(t)] + [fmt(x) for x in s])


# pineapple demo -------------------------------------------------------------


def run_pineapple_demo(out_dir, M=51, seed=7):
    """Write ``mixture.csv``, ``stochastic.csv`` and ``deterministic.csv``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = pineapple_gmm()
    with open(out / "mixture.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "weight", "mean_x", "mean_y", "cov_xx", "cov_xy", "cov_yy"])
        for i in range(len(m)):
            c = m.covs[i]
            w.writerow([i + 1, fmt(m.weights[i]), fmt(m.means[i, 0]), fmt(m.means[i, 1]),
                        fmt(c[0, 0]), fmt(c[0, 1]), fmt(c[1, 1])])
    samples = {
        "stochastic": stochastic_resample(m, len(m), keyed_rng(seed, 0, Stream.RESAMPLE)),
        "deterministic": deterministic_resample(m, M),
    }
    for name, pts in samples.items():
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y"])
            for p in pts:
                w.writerow([fmt(p[0]), fmt(p[1])])
    return samples
