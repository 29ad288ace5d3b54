"""Command-line entry point: ``filterlab <command> [options]``.

Exit status is 0 on success, 2 for configuration errors and 3 when every
trial failed numerically.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, FilterLabError
from .fibgrid import gmm_grid, standard_fib_grid
from .harness import (LorenzExperiment, NrhoExperiment, apply_overrides, fmt, load_config_file,
                      nrho_truth, run_lorenz_experiment, run_nrho_experiment, run_pineapple_demo,
                      write_lorenz_csv, write_nrho_outputs, write_truth_csv)
from .models.nrho import NrhoConfig
from .models.pineapple import pineapple_gmm
from .transport import cost_matrix, solve_transport

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

log = logging.getLogger("filterlab")


def _settings(args, names):
    """Config-file values overlaid with the flags actually given."""
    values = load_config_file(args.config) if args.config else {}
    for name in names:
        val = getattr(args, name, None)
        if val is not None and val is not False:
            values[name] = val
    return values


def _cmd_lorenz(args):
    base = LorenzExperiment.paper_scale() if args.paper_scale else LorenzExperiment()
    names = ["particles", "trials", "steps", "spinup", "filters", "seed", "M", "defensive",
             "spin_in", "init_spread", "workers", "out"]
    values = _settings(args, names)
    if args.drop_y_term:
        values["drop_y_term"] = True
    cfg = apply_overrides(base, values)
    result = run_lorenz_experiment(cfg)
    path = write_lorenz_csv(result, cfg.out)
    for msg in result.messages:
        log.warning(msg)
    print(f"wrote {path}")
    return EXIT_NUMERICAL if result.all_failed else 0


def _cmd_nrho(args):
    names = ["orbits", "trials", "particles", "filters", "seed", "M", "defensive", "initial",
             "workers", "out"]
    cfg = apply_overrides(NrhoExperiment(), _settings(args, names))
    result = run_nrho_experiment(cfg)
    out = write_nrho_outputs(result, cfg.out)
    for e in result.events:
        log.info(e)
    print(f"wrote {out}/")
    return EXIT_NUMERICAL if result.all_failed else 0


def _cmd_truth(args):
    if args.initial not in ("table", "halo"):
        raise ConfigError("initial must be 'table' or 'halo'")
    truth = nrho_truth(NrhoConfig.from_constants(args.initial), args.orbits)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_truth_csv(truth.epochs, truth.states, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_demo_pineapple(args):
    if args.M < 1 or args.M % 2 == 0:
        raise ConfigError("M must be a positive odd integer")
    run_pineapple_demo(args.out, M=args.M, seed=args.seed)
    print(f"wrote {args.out}/")
    return 0


def _cmd_demo_grid(args):
    if args.M < 1 or args.M % 2 == 0:
        raise ConfigError("M must be a positive odd integer")
    if args.standard_dim:
        pts = standard_fib_grid(args.M, args.standard_dim).points
        comp = np.zeros(len(pts), dtype=int)
        gidx = np.arange(len(pts))
        weights = np.full(len(pts), 1.0 / len(pts))
    else:
        coll = gmm_grid(pineapple_gmm(), args.M)
        pts, comp, gidx, weights = coll.points, coll.component_index, coll.grid_index, coll.weights
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component_index", "grid_index"] + [f"x{d}" for d in range(pts.shape[1])]
                   + ["weight"])
        for c, g, p, wt in zip(comp, gidx, pts, weights):
            w.writerow([int(c), int(g)] + [fmt(x) for x in p] + [fmt(wt)])
    print(f"wrote {args.out}")
    return 0


def _read_weighted_points(path):
    """Rows of ``coordinates..., weight``; a non-numeric first row is a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        [float(x) for x in rows[0]]
    except ValueError:
        rows = rows[1:]
    except IndexError:
        raise ConfigError(f"{path} is empty") from None
    try:
        data = np.array([[float(x) for x in r] for r in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] < 2:
        raise ConfigError(f"{path}: need coordinate column(s) and a weight column")
    return data[:, :-1], data[:, -1]


def _cmd_transport(args):
    src, a = _read_weighted_points(args.src)
    dst, b = _read_weighted_points(args.dst)
    try:
        plan = solve_transport(cost_matrix(src, dst), a, b, pivot=args.pivot, initial=args.initial)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"t{j}" for j in range(plan.shape[1])])
        for row in plan.plan:
            w.writerow([fmt(x) for x in row])
    print(f"objective={fmt(plan.cost)}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="filterlab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lorenz63", help="Lorenz '63 Monte Carlo RMSE sweep")
    p.add_argument("--config")
    p.add_argument("--particles", help="comma separated ensemble sizes")
    p.add_argument("--trials", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--spinup", type=int)
    p.add_argument("--filters", help="comma separated: pineapple, engmf, free")
    p.add_argument("--seed", type=int)
    p.add_argument("--M", type=int, help="grid points per component (odd)")
    p.add_argument("--defensive", help="'sqrt' for 0.1/sqrt(N) or a constant")
    p.add_argument("--spin-in", dest="spin_in", type=int)
    p.add_argument("--init-spread", dest="init_spread", type=float)
    p.add_argument("--lorenz-paper-rhs", dest="drop_y_term", action="store_true",
                   help="drop the -y term from the second equation")
    p.add_argument("--paper-scale", action="store_true", help="192 trials, N = 2..30")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_lorenz)

    p = sub.add_parser("nrho", help="lunar halo orbit tracking experiment")
    p.add_argument("--config")
    p.add_argument("--orbits", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--particles", type=int)
    p.add_argument("--filters", help="comma separated: pineapple, engmf, ukf")
    p.add_argument("--seed", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--defensive", type=float)
    p.add_argument("--initial", choices=["table", "halo"])
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_nrho)

    p = sub.add_parser("truth", help="dump the station-kept truth at measurement epochs")
    p.add_argument("--orbits", type=int, default=20)
    p.add_argument("--initial", default="table")
    p.add_argument("--out", default="truth.csv")
    p.set_defaults(func=_cmd_truth)

    p = sub.add_parser("transport", help="solve a transport problem from two CSV files")
    p.add_argument("--src", required=True, help="rows: coordinates..., weight")
    p.add_argument("--dst", required=True)
    p.add_argument("--pivot", choices=["dantzig", "bland"], default="dantzig")
    p.add_argument("--initial", choices=["least-cost", "northwest"], default="least-cost")
    p.add_argument("--out", default="plan.csv")
    p.set_defaults(func=_cmd_transport)

    demo = sub.add_parser("demo", help="demonstration outputs").add_subparsers(
        dest="demo", required=True)
    p = demo.add_parser("pineapple", help="stochastic vs deterministic resampling samples")
    p.add_argument("--M", type=int, default=51)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", default="demo")
    p.set_defaults(func=_cmd_demo_pineapple)
    p = demo.add_parser("grid", help="deterministic grid points as CSV")
    p.add_argument("--M", type=int, default=51)
    p.add_argument("--standard-dim", type=int, default=0,
                   help="grid N(0, I_n) instead of the pineapple mixture")
    p.add_argument("--out", default="grid.csv")
    p.set_defaults(func=_cmd_demo_grid)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"filterlab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FilterLabError as exc:
        print(f"filterlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
