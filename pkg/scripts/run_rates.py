"""Fitted log-log slopes of E^(r) for the rate experiments.

    python scripts/run_rates.py --out results/rates.csv
"""

import argparse
import csv
import sys

from lasserre_bounds.cli import ExperimentConfig, rate_report

# (function, domain, measure, recentre, window, ceiling)
EXPERIMENTS = [
    ("linear", "box1", "chebyshev", False, (10, 20), -1.6),
    ("linear", "box1", "lebesgue", False, (10, 20), -1.6),
    ("linear", "box2", "chebyshev", False, (10, 20), -1.6),
    ("linear", "box2", "lebesgue", False, (10, 20), -1.6),
    ("linear", "ball2", "lebesgue", False, (10, 20), -1.0),
    ("linear", "octagon", "lebesgue", False, (10, 20), -1.0),
    ("linear", "simplex2", "lebesgue", False, (10, 20), -1.0),
    ("quadratic", "box2", "lebesgue", False, (10, 20), -1.0),
    ("x4", "interval01", "lebesgue", True, (10, 20), -2.5),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=None, help="CSV path (stdout if omitted)")
    args = ap.parse_args()
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["function", "domain", "measure", "r_lo", "r_hi", "slope", "stderr", "ceiling", "status"])
    for func, dom, meas, rec, window, ceiling in EXPERIMENTS:
        cfg = ExperimentConfig(function=func, domain=dom, measure=meas, r_max=window[1], recentre=rec)
        out = rate_report(cfg, window, ceiling)
        w.writerow([func, dom, meas, *window, "%.4f" % out["slope"], "%.4f" % out["stderr"], ceiling, out["status"]])
        fh.flush()
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
