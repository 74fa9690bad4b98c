"""Needle bounds against eigen bounds of the same density degree.

The objective is x1 + 1 on [-1, 1]^2 recentred at the vertex (-1, -1). It
depends on one coordinate of a product domain, so its eigen bound at any
order equals the univariate bound of x + 1 on [-1, 1]; that keeps the
order-160 comparison cheap.

    python scripts/run_needle_comparison.py --out results/needles.csv
"""

import argparse
import csv
import sys

from lasserre_bounds.bounds import ConvexBody, GradedSolver, needle_bound_details
from lasserre_bounds.domains import Box
from lasserre_bounds.estimators import recentre
from lasserre_bounds.moments import MomentOracle
from lasserre_bounds.poly import Polynomial


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rs", type=int, nargs="+", default=[5, 10, 20, 30, 40, 50])
    ap.add_argument("--precision-bits", type=int, default=640)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    f, d, _ = recentre(Polynomial.variable(0, 2) + 1, Box(2), [-1.0, -1.0])
    oracle = MomentOracle(d)
    x = Polynomial.variable(0, 1)
    solver = GradedSolver(x + 1, MomentOracle(Box(1), precision_bits=args.precision_bits))
    eigen = [solver.advance().value]

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["r", "h", "in_regime", "density_degree", "needle_bound", "eigen_order", "eigen_bound"])
    for r in args.rs:
        nb = needle_bound_details(f, d, [0.0, 0.0], r, ConvexBody(), strict=False, oracle=oracle)
        order = nb.degree // 2
        while len(eigen) <= order:
            eigen.append(solver.advance().value)
        w.writerow([r, "%.6g" % nb.h, nb.in_regime, nb.degree, "%.10g" % nb.value, order, "%.10g" % eigen[order]])
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
