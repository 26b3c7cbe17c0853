"""Command-line entry point: ``simulate``, ``estimate``, ``experiment``, ``verify``.

Exit status: 0 success, 1 usage or input error, 2 numerical failure
(overflow, zero denominator, bad embedding), 3 a requested check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import FouError, NumericalError
from .estimators import METHODS, decomposition_residual, estimate
from .fou import SCHEMES, FouParams, GridSpec, Scheme, simulate_fou
from .harness import ExperimentConfig, PartialExperiment, reproduce_table, run_experiment
from .paths import read_path_csv, write_path_csv
from . import theory

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

# Covariance used by ``verify --check isserlis``.
ISSERLIS_COV = np.array([
    [1.0, 0.5, 0.2, 0.1],
    [0.5, 1.0, 0.3, 0.4],
    [0.2, 0.3, 1.0, 0.6],
    [0.1, 0.4, 0.6, 1.0],
])


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fou-drift", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="simulate an fOU path and its driving fBm")
    sim.add_argument("--theta", type=float, required=True)
    sim.add_argument("--x0", type=float, default=1.0)
    sim.add_argument("--hurst", type=float, required=True)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--m", type=float, required=True)
    sim.add_argument("--scheme", choices=SCHEMES + ("exact-representation",), default="exact")
    sim.add_argument("--oversample", type=int, default=8)
    sim.add_argument("--seed", type=_seed, required=True)
    sim.add_argument("--out-x", type=Path, required=True, help="CSV for the fOU path")
    sim.add_argument("--out-b", type=Path, required=True, help="CSV for the fBm driver")

    est = sub.add_parser("estimate", help="estimate the drift from a path CSV")
    est.add_argument("--input", type=Path, required=True)
    est.add_argument("--n", type=int, required=True)
    est.add_argument("--method", choices=METHODS, default="theta-hat")
    est.add_argument("--hurst", type=float, help="Hurst index (hu-song only)")
    est.add_argument("--delta", type=float, help="observation step (default 1/n)")

    exp = sub.add_parser("experiment", help="run a Monte Carlo experiment")
    src = exp.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", type=Path, help="JSON with ExperimentConfig fields")
    src.add_argument("--table", type=int, choices=range(1, 6), help="published-table preset")
    exp.add_argument("--seed", type=_seed, help="required with --table; overrides the config seed")
    exp.add_argument("--out", type=Path, required=True)
    exp.add_argument("--csv", type=Path)
    exp.add_argument("--threads", type=int, default=1)
    exp.add_argument("--replications", type=int, help="override the replication count")

    ver = sub.add_parser("verify", help="numerical checks of auxiliary identities and bounds")
    ver.add_argument("--check", action="append", required=True,
                     choices=("isserlis", "neg-corr", "lemma-sums", "var-bound", "decomposition"))
    ver.add_argument("--seed", type=_seed)
    ver.add_argument("--n", type=int, default=10)
    ver.add_argument("--m", type=float, default=2.0)
    ver.add_argument("--hurst", type=float, default=0.45)
    ver.add_argument("--theta", type=float, default=-3.0)
    ver.add_argument("--replications", type=int, default=10**4)
    ver.add_argument("--samples", type=int, default=10**6, help="Isserlis Monte Carlo size")
    ver.add_argument("--n-list", type=_int_list, default=[4, 8, 16, 32, 64])
    ver.add_argument("--oversample", type=int, default=32)
    ver.add_argument("--tol", type=float, default=1e-3, help="decomposition residual bound")
    return parser


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError("this command needs an explicit --seed")
    return args.seed


def _simulate(args) -> int:
    params = FouParams(args.theta, args.x0, args.hurst)
    pair = simulate_fou(params, GridSpec(args.n, args.m), Scheme(args.scheme, args.oversample), args.seed)
    write_path_csv(pair.fou, args.out_x)
    write_path_csv(pair.driver, args.out_b)
    return EXIT_OK


def _estimate(args) -> int:
    path = read_path_csv(args.input)
    result = estimate(path, args.method, n=args.n, delta=args.delta, h=args.hurst)
    print(json.dumps(result.to_dict()))
    return EXIT_OK


def _experiment(args) -> int:
    progress = lambda c: print(f"cell h={c.h} n={c.n}: {c.count} replications, mean {c.mean:.6g}",
                               file=sys.stderr)
    overrides = {} if args.replications is None else {"replications": args.replications}
    try:
        if args.table is not None:
            report = reproduce_table(args.table, _need_seed(args), args.threads, progress=progress,
                                     **overrides)
        else:
            data = json.loads(args.config.read_text())
            if args.seed is not None:
                data["seed"] = args.seed
            elif "seed" not in data:
                raise UsageError("config has no seed; pass --seed")
            data.update(overrides)
            report = run_experiment(ExperimentConfig.from_dict(data), args.threads, progress=progress)
    except PartialExperiment as exc:
        args.out.write_text(exc.report.to_json())
        raise exc.cause.cause from exc
    args.out.write_text(report.to_json())
    if args.csv is not None:
        args.csv.write_text(report.to_csv())
    return EXIT_OK


def _decomposition_report(args) -> theory.CheckReport:
    params = FouParams(args.theta, 1.0, args.hurst)
    grid = GridSpec(args.n, args.m)
    pair = simulate_fou(params, grid, Scheme("exact", args.oversample), _need_seed(args), keep_refined=True)
    residual = decomposition_residual(pair, params, grid)
    return theory.CheckReport(
        "decomposition", residual < args.tol, residual, args.tol,
        f"theta={args.theta} h={args.hurst} n={args.n} m={args.m} oversample={args.oversample}",
    )


def _verify(args) -> int:
    reports = []
    for check in args.check:
        if check == "isserlis":
            reports.append(theory.check_isserlis(ISSERLIS_COV, args.samples, _need_seed(args)))
        elif check == "neg-corr":
            reports.append(theory.check_negative_increment_correlation(args.n, args.m, args.hurst))
        elif check == "lemma-sums":
            reports.extend(theory.check_lemma_sums(args.n_list, args.m, args.hurst))
        elif check == "var-bound":
            reports.append(theory.check_variance_lower_bound(
                args.n, args.m, args.hurst, args.theta, args.replications, _need_seed(args)))
        else:
            reports.append(_decomposition_report(args))
    for r in reports:
        print(json.dumps(r.to_dict()))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


COMMANDS = {"simulate": _simulate, "estimate": _estimate, "experiment": _experiment, "verify": _verify}


def dispatch(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, FouError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
