#!/usr/bin/env python3
"""Exhaustive rectangle bound sweep over a range of lattice sizes.

Writes one CSV row per (m, n) pair with the rectangle count and the
number of bound violations at the default slack.
"""

import argparse
import csv
import sys
import time

from cplab.fibonacci_lattice import check_all_lattice_rectangles


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", type=int, nargs="+", default=[13, 21, 34, 55, 89])
    parser.add_argument("--scale", type=int, default=8, help="n = scale * m")
    parser.add_argument("--out", default="lattice_sweep.csv")
    args = parser.parse_args()

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "rectangles", "violations", "seconds"])
        total_violations = 0
        for m in args.sizes:
            n = args.scale * m
            t0 = time.time()
            sweep = check_all_lattice_rectangles(m, n)
            elapsed = time.time() - t0
            writer.writerow([m, n, sweep.rectangles, sweep.violations, f"{elapsed:.2f}"])
            total_violations += sweep.violations
            print(f"m={m} n={n}: {sweep.violations}/{sweep.rectangles} violations ({elapsed:.2f}s)")
    if total_violations:
        sys.exit(1)


if __name__ == "__main__":
    main()
