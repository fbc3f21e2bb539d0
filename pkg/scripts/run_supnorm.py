#!/usr/bin/env python3
"""Sup-norm ratio experiment: run the default form catalog through the solve
operator at two suite resolutions and report the ratio table and stability.

Example:
    python scripts/run_supnorm.py --coarse 24 --fine 48 --points 9
"""

import argparse

from dbar.forms import ProductDomain, SamplePlan
from dbar.geometry import make_disk
from dbar.operator_t import QuadratureSuite
from dbar.verification import default_form_catalog, supnorm_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--coarse", type=int, default=24)
    ap.add_argument("--fine", type=int, default=48)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--margin", type=float, default=0.1)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args()

    omega = ProductDomain((make_disk(0, 1.0), make_disk(0, 1.0)))
    plan = SamplePlan.sample(omega, args.points, args.margin, args.seed)
    catalog = default_form_catalog(2)

    tables = {}
    for label, size in (("coarse", args.coarse), ("fine", args.fine)):
        suite = QuadratureSuite.build(omega, size, size)
        tables[label] = supnorm_study(catalog, omega, suite, plan)

    print(f"{'form':<28} {'sup|f|':>10} {'ratio@coarse':>13} {'ratio@fine':>12}")
    for rc, rf in zip(tables["coarse"], tables["fine"]):
        print(f"{rc.label:<28} {rc.sup_f:>10.3e} {rc.ratio:>13.5f} {rf.ratio:>12.5f}")
    mc = max(r.ratio for r in tables["coarse"])
    mf = max(r.ratio for r in tables["fine"])
    print(f"max ratio: coarse={mc:.5f} fine={mf:.5f} rel change={abs(mc-mf)/mf:.2%}")


if __name__ == "__main__":
    main()
