"""Error series for the six benchmark functions on the box, ball and octagon.

Writes one CSV per cell and a ratio summary (ball/box, octagon/box and
Chebyshev/Lebesgue on the box) with tail statistics over the last five r.

    python scripts/run_figures.py --r-max 20 --out results/figures
"""

import argparse
import csv
import os
import time

from lasserre_bounds.bounds import upper_bound_series
from lasserre_bounds.cli import SERIES_COLUMNS, ratio_rows, rows_to_csv
from lasserre_bounds.domains import CHEBYSHEV, LEBESGUE
from lasserre_bounds.registry import TABLE_FUNCTIONS, domains, resolve_function

CELLS = [("box2", "lebesgue"), ("box2", "chebyshev"), ("ball2", "lebesgue"), ("octagon", "lebesgue")]
RATIOS = [
    ("ball_over_box", ("ball2", "lebesgue"), ("box2", "lebesgue")),
    ("octagon_over_box", ("octagon", "lebesgue"), ("box2", "lebesgue")),
    ("chebyshev_over_lebesgue", ("box2", "chebyshev"), ("box2", "lebesgue")),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r-max", type=int, default=20)
    ap.add_argument("--out", default="results/figures")
    ap.add_argument("--precision-bits", type=int, default=256)
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)
    table = domains()
    errors = {}
    for name in TABLE_FUNCTIONS:
        for dom, meas in CELLS:
            entry = resolve_function(name, dom, table[dom])
            measure = CHEBYSHEV if meas == "chebyshev" else LEBESGUE
            t0 = time.perf_counter()
            series = upper_bound_series(entry.poly, table[dom], measure, args.r_max, entry.f_min, args.precision_bits)
            rows = [
                {"r": res.r, "bound": res.value, "error": float(e), "residual": res.residual, "wall_ms": res.wall_ms}
                for res, e in zip(series.results, series.errors)
            ]
            with open(os.path.join(args.out, f"{name}_{dom}_{meas}.csv"), "w") as fh:
                fh.write(rows_to_csv(rows, SERIES_COLUMNS))
            errors[(name, dom, meas)] = series.error_map()
            print(f"{name:10s} {dom:8s} {meas:10s} E(r_max)={series.errors[-1]:.4e}  {time.perf_counter() - t0:6.1f}s", flush=True)
    with open(os.path.join(args.out, "ratio_tails.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["function", "ratio", "tail_mean", "tail_stdev", "tail_cv"])
        for name in TABLE_FUNCTIONS:
            for label, num, den in RATIOS:
                _, tail = ratio_rows(errors[(name,) + num], errors[(name,) + den])
                w.writerow([name, label, "%.6g" % tail["tail_mean"], "%.6g" % tail["tail_stdev"], "%.4f" % tail["tail_cv"]])
                print(f"{name:10s} {label:24s} mean={tail['tail_mean']:.4g} cv={tail['tail_cv']:.4f}")


if __name__ == "__main__":
    main()
