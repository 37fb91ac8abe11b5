"""Command-line interface.

JSON goes to stdout (or ``--out``); a short human-readable summary goes to
stderr. Exit codes: 0 success, 2 input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

import numpy as np

from . import __version__
from ._json import dumps
from .errors import (
    ConfigError,
    DegenerateError,
    DomainError,
    EmptyError,
    FormatError,
    InvalidDirection,
    SingularHessian,
    UnsupportedNorm,
)
from .inference import confint_functional, infer
from .measure import line_mass_sup, load_measure
from .montecarlo import ExperimentConfig, run_bahadur, run_consistency, run_normality
from .objective import ObjectiveContext, radius_bound
from .optimizer import SolverConfig, grid_minimize_2d, solve
from .taylor import collinear_sweep
from .univariate import univariate_quantile

EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(c) for c in text.split(",")], dtype=float)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _ell_for(mu, ell):
    if ell is None:
        return np.zeros(mu.dim)
    if ell.size == 1 and mu.dim > 1 and ell[0] == 0.0:
        return np.zeros(mu.dim)
    return ell


def _envelope(args, payload: dict, seed=None) -> dict:
    config = {k: (v.tolist() if isinstance(v, np.ndarray) else v)
              for k, v in vars(args).items() if k != "func"}
    return {"version": __version__, "seed": seed, "config": config, **payload}


def _emit(args, doc: dict):
    text = dumps(doc) + "\n"
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_estimate(args):
    mu = load_measure(args.input)
    ctx = ObjectiveContext(mu, _ell_for(mu, args.ell))
    cfg = SolverConfig(grad_tol=args.tol, max_iters=args.max_iters,
                       target_epsilon=args.target_epsilon,
                       init=args.init if args.init_point is None else args.init_point)
    sol = solve(ctx, cfg)
    print(f"alpha_hat = {sol.alpha_hat}, certified gap {sol.epsilon_certified:.3g}, "
          f"{sol.iterations} iterations", file=sys.stderr)
    _emit(args, _envelope(args, sol.to_dict(with_trace=args.trace)))


def cmd_univariate(args):
    mu = load_measure(args.input)
    iv = univariate_quantile(mu, float(args.ell[0]) if args.ell is not None else 0.0)
    print(f"quantile interval [{iv.lo}, {iv.hi}]", file=sys.stderr)
    _emit(args, _envelope(args, iv.to_dict()))


def cmd_infer(args):
    mu = load_measure(args.input)
    ctx = ObjectiveContext(mu, _ell_for(mu, args.ell))
    sol = solve(ctx, SolverConfig(grad_tol=args.tol, keep_trace=False))
    report = infer(ctx, sol.alpha_hat, allow_pinv=args.allow_pinv)
    payload = {"solution": sol.to_dict(), "inference": report.to_dict(),
               "centered_at": "alpha_hat"}
    if args.functional is not None:
        if report.Sigma is None:
            raise SingularHessian("curvature matrix is singular; no confidence interval")
        lo, hi = confint_functional(report, sol.alpha_hat, args.functional, mu.size, args.level)
        payload["confidence_interval"] = {"functional": args.functional.tolist(),
                                          "level": args.level, "lo": lo, "hi": hi}
        print(f"{args.level:.0%} interval [{lo:.6g}, {hi:.6g}]", file=sys.stderr)
    print(f"kappa = {report.kappa:.4g}", file=sys.stderr)
    _emit(args, _envelope(args, payload))


_RUNNERS = {"normality": run_normality, "bahadur": run_bahadur, "consistency": run_consistency}


def cmd_simulate(args):
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    experiment = data.pop("experiment", args.experiment)
    if experiment not in _RUNNERS:
        raise ConfigError(f"experiment must be one of {sorted(_RUNNERS)}")
    if args.threads is not None:
        data["threads"] = args.threads
    data["keep_rows"] = bool(args.rows_csv) or data.get("keep_rows", False)
    cfg = ExperimentConfig.from_dict(data)
    report = _RUNNERS[experiment](cfg)
    doc = report.to_dict()
    doc["experiment"] = experiment
    rows = doc.pop("rows", None)
    if args.rows_csv and rows:
        with open(args.rows_csv, "w", newline="") as fh:
            keys = sorted({k for r in rows for k in r})
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for r in rows:
                writer.writerow({k: (dumps(v) if isinstance(v, (list, np.ndarray)) else v)
                                 for k, v in r.items()})
    for e in report.per_n:
        print(f"n={e['n']}: median error {e['median_error']}, "
              f"median remainder {e['median_remainder']}", file=sys.stderr)
    _emit(args, doc)


def cmd_diagnose(args):
    mu = load_measure(args.input)
    mass, witness = line_mass_sup(mu)
    payload = {
        "line_mass_sup": mass,
        "in_M_minus": bool(abs(mass - 1.0) <= 1e-12),
        "witness": {"point": witness.point.tolist(),
                    "direction": None if witness.direction is None else witness.direction.tolist()},
        "max_atom_weight": float(mu.weights.max()),
        "radius_bound": radius_bound(ObjectiveContext(mu, np.zeros(mu.dim))),
    }
    print(f"largest mass on a line: {mass:.6g}", file=sys.stderr)
    _emit(args, _envelope(args, payload))


def cmd_taylor_sweep(args):
    lambdas = np.linspace(args.lambda_min, args.lambda_max, args.points)
    r2, r1 = collinear_sweep(lambdas, dim=args.dim)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["lambda", "ratio_norm_order2", "ratio_gradient_order1"])
    for row in zip(lambdas, r2, r1):
        writer.writerow([format(float(x), ".17g") for x in row])
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    print(f"max ratios: {np.nanmax(r2):.6f} (norm), {np.nanmax(r1):.6f} (gradient)", file=sys.stderr)


def cmd_grid_oracle(args):
    mu = load_measure(args.input)
    ctx = ObjectiveContext(mu, _ell_for(mu, args.ell), args.norm)
    box = args.box
    if box.size != 4:
        raise FormatError("--box needs lo_x,lo_y,hi_x,hi_y")
    argmin, value = grid_minimize_2d(ctx, (box[:2], box[2:]), args.resolution)
    print(f"grid minimum {value:.12g} attained at {len(argmin)} grid points", file=sys.stderr)
    _emit(args, _envelope(args, {"min_value": value, "argmin": argmin.tolist()}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoquantile", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="certified geometric quantile of a CSV sample")
    p.add_argument("--input", required=True)
    p.add_argument("--ell", type=_vector, help='direction, e.g. "0,0.5" (default 0)')
    p.add_argument("--tol", type=float, default=1e-10, help="subgradient tolerance")
    p.add_argument("--target-epsilon", type=float)
    p.add_argument("--max-iters", type=int, default=100_000)
    p.add_argument("--init", choices=["weighted_mean", "coordinatewise_median"],
                   default="weighted_mean")
    p.add_argument("--init-point", type=_vector)
    p.add_argument("--trace", action="store_true", help="include the iteration trace")
    p.add_argument("--json", "--out", dest="out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("univariate", help="exact quantile interval of 1-D data")
    p.add_argument("--input", required=True)
    p.add_argument("--ell", type=_vector)
    p.add_argument("--json", "--out", dest="out")
    p.set_defaults(func=cmd_univariate)

    p = sub.add_parser("infer", help="plug-in sandwich inference at the estimate")
    p.add_argument("--input", required=True)
    p.add_argument("--ell", type=_vector)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--functional", type=_vector)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--allow-pinv", action="store_true")
    p.add_argument("--json", "--out", dest="out")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("simulate", help="run a seeded Monte-Carlo experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--experiment", choices=sorted(_RUNNERS), default="normality")
    p.add_argument("--threads", type=int, help="worker threads (env GEOQUANTILE_THREADS)")
    p.add_argument("--rows-csv", help="also write per-replication rows here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="line-concentration and radius diagnostics")
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("taylor-sweep", help="ratio curves for the norm Taylor bounds (CSV)")
    p.add_argument("--lambda-min", type=float, default=-3.0)
    p.add_argument("--lambda-max", type=float, default=1.0)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_taylor_sweep)

    p = sub.add_parser("grid-oracle", help="brute-force 2-D minimisation under any norm")
    p.add_argument("--input", required=True)
    p.add_argument("--ell", type=_vector)
    p.add_argument("--norm", choices=["euclidean", "l1", "linf"], default="euclidean")
    p.add_argument("--box", type=_vector, default=np.array([-2.0, -2.0, 2.0, 2.0]))
    p.add_argument("--resolution", type=int, default=401)
    p.add_argument("--out")
    p.set_defaults(func=cmd_grid_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (SingularHessian, DegenerateError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, EmptyError, InvalidDirection, UnsupportedNorm, DomainError,
            ConfigError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
