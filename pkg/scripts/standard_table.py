#!/usr/bin/env python3
"""Standard double bubbles over dimensions and volume ratios, as CSV.

    python3 scripts/standard_table.py --dims 3 8 --ratios 1 1.5 2 10 100 > table.csv
"""

import argparse
import csv
import sys

from dbubble.io import fmt
from dbubble.standard import solve_standard

COLUMNS = ("n", "ratio", "rho", "beta", "r1", "r0", "r2", "H1", "H2", "total_area", "cocycle", "volume_residual")


def rows(dims, ratios):
    for n in dims:
        for q in ratios:
            b = solve_standard(n, 1.0, q)
            r1, r0, r2 = b.radii
            yield [
                n, fmt(q), fmt(b.rho), fmt(b.beta), fmt(r1), fmt(r0), fmt(r2),
                fmt(b.pressures.H1), fmt(b.pressures.H2), fmt(b.total_area),
                fmt(b.curvature_cocycle_residual()), fmt(b.volume_residual()),
            ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=int, nargs=2, default=(3, 8), metavar=("LO", "HI"))
    ap.add_argument("--ratios", type=float, nargs="+", default=[1.0, 1.5, 2.0, 10.0, 100.0])
    args = ap.parse_args(argv)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows(rows(range(args.dims[0], args.dims[1] + 1), args.ratios))
    return 0


if __name__ == "__main__":
    sys.exit(main())
