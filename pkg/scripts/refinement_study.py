"""Residuals of the integral equation and of the estimator decomposition versus oversampling.

One fBm path is drawn at the finest resolution and subsampled for every
coarser factor, so the rows differ only in discretisation.

    python scripts/refinement_study.py --theta -3 --hurst 0.45 --n 10 --m 2 --seed 1
"""

import argparse
import sys

from fou_drift.estimators import decomposition_residual
from fou_drift.fbm import cumulate, sample_fgn_circulant
from fou_drift.fou import FouParams, GridSpec, Scheme, integral_residual, integral_residual_tol, simulate_fou


def study(params, grid, seed, factors=(2, 4, 8, 16, 32, 64), kind="exact"):
    top = max(factors)
    dt = 1.0 / (grid.n * top)
    master = cumulate(sample_fgn_circulant(grid.steps * top, dt, params.h, seed), dt).values
    rows = []
    for rho in factors:
        scheme = Scheme(kind, rho)
        pair = simulate_fou(params, grid, scheme, driver=master[:: top // rho], keep_refined=True)
        rows.append((rho, integral_residual(pair, params), integral_residual_tol(pair, params, scheme),
                     decomposition_residual(pair, params, grid) if kind == "exact" else float("nan")))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--theta", type=float, default=-3.0)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--hurst", type=float, default=0.45)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--scheme", choices=("exact", "euler"), default="exact")
    p.add_argument("--seed", type=int, required=True)
    args = p.parse_args(argv)

    params, grid = FouParams(args.theta, args.x0, args.hurst), GridSpec(args.n, args.m)
    print(f"{'rho':>4} {'integral res':>13} {'tol':>10} {'decomp res':>11}")
    prev = None
    for rho, res, tol, dec in study(params, grid, args.seed, kind=args.scheme):
        ratio = "" if prev is None else f"  x{prev / dec:.2f}"
        print(f"{rho:4d} {res:13.3e} {tol:10.3e} {dec:11.3e}{ratio}")
        prev = dec
    return 0


if __name__ == "__main__":
    sys.exit(main())
