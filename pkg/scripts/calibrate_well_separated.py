#!/usr/bin/env python3
"""Monte Carlo oracle run fixing the well-separated frequency baselines.

Run this to (re)calibrate the frequencies recorded in
cplab.grid_analysis.WELL_SEPARATED_BASELINES. Uses seeds disjoint from
the regression tests (which start at 0) so the baseline and the
regression estimate stay independent.
"""

import argparse
import time

from cplab.grid_analysis import WELL_SEPARATED_BASELINES, well_separated_frequency


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=20000)
    parser.add_argument("--seed-base", type=int, default=1_000_000)
    args = parser.parse_args()
    for baseline in WELL_SEPARATED_BASELINES:
        t0 = time.time()
        freq = well_separated_frequency(
            baseline.n, baseline.beta, baseline.epoch_size,
            trials=args.trials, seed_base=args.seed_base,
        )
        print(
            f"n={baseline.n} beta={baseline.beta:g} m={baseline.epoch_size}: "
            f"frequency={freq:.4f} over {args.trials} trials "
            f"(recorded {baseline.frequency:.4f}, {time.time() - t0:.1f}s)"
        )


if __name__ == "__main__":
    main()
