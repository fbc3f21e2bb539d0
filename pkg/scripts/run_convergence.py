#!/usr/bin/env python3
"""Convergence experiment: refine the quadrature suite and watch the solve
error and FD residual fall on a manufactured problem.

Example:
    python scripts/run_convergence.py --potential "conj(z1)*conj(z2)" \
        --sizes 16 32 64 --points 5
"""

import argparse

from dbar.forms import ProductDomain, SamplePlan
from dbar.geometry import make_disk, make_ellipse
from dbar.operator_t import QuadratureSuite
from dbar.verification import convergence_study
from dbar.wirtinger_expr import parse


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--potential", default="conj(z1)*conj(z2)")
    ap.add_argument("--sizes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--points", type=int, default=5)
    ap.add_argument("--margin", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--ellipse", action="store_true", help="use an elliptical second factor")
    args = ap.parse_args()

    second = make_ellipse(0, 1.3, 0.8) if args.ellipse else make_disk(0, 1.0)
    omega = ProductDomain((make_disk(0, 1.0), second))
    u = parse(args.potential, omega.arity)
    plan = SamplePlan.sample(omega, args.points, args.margin, args.seed)
    suites = [QuadratureSuite.build(omega, s, s) for s in args.sizes]
    rows = convergence_study(u, omega, suites, plan)
    print(f"{'nr':>5} {'ntheta':>7} {'max|Tf-u|':>13} {'residual':>13}")
    for r in rows:
        print(f"{r.nr:>5} {r.ntheta:>7} {r.max_error:>13.3e} {r.residual:>13.3e}")


if __name__ == "__main__":
    main()
