#!/usr/bin/env python3
"""Uniform-bound probes: drive evaluation points toward the boundary and
report the weakly singular integrals, which must stay monotone-bounded.

Example:
    python scripts/run_bounds.py --alphas-area 0.3333 1.6667 --halvings 8
"""

import argparse

from dbar.geometry import make_disk, make_ellipse
from dbar.verification import lemma_bound_area, lemma_bound_boundary


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas-area", type=float, nargs="+", default=[1 / 3, 5 / 3])
    ap.add_argument("--alphas-boundary", type=float, nargs="+", default=[0.5, 0.75])
    ap.add_argument("--start", type=float, default=0.1)
    ap.add_argument("--halvings", type=int, default=8)
    ap.add_argument("--ellipse", action="store_true")
    args = ap.parse_args()

    d = make_ellipse(0, 1.3, 0.8) if args.ellipse else make_disk(0, 1.0)
    dists = [args.start / 2**k for k in range(args.halvings)]
    r_edge = float(d.radius(0.0))
    z_list = [d.center + (r_edge - t) for t in dists]

    print("distances:", " ".join(f"{t:.2e}" for t in dists))
    for alpha in args.alphas_area:
        vals = lemma_bound_area(d, alpha, z_list)
        print(f"area  alpha={alpha:.4f}: " + " ".join(f"{v:8.4f}" for v in vals))
    for alpha in args.alphas_boundary:
        vals = lemma_bound_boundary(d, alpha, z_list)
        print(f"bdry  alpha={alpha:.4f}: " + " ".join(f"{v:8.4f}" for v in vals))


if __name__ == "__main__":
    main()
