#!/usr/bin/env python3
"""Average DIC of the Bayesian response models across scenarios.

Example:

    python scripts/run_dic_study.py --scenarios 1 4 5 --n 500 --reps 50
"""

import argparse

import numpy as np

from pgmnar.evaluation import StudyConfig, replication_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", nargs="+", type=int, default=[1, 4, 5])
    ap.add_argument("--n", nargs="+", type=int, default=[500])
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--methods", nargs="+", default=["LR", "SR"])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()

    study = StudyConfig(master_seed=args.seed, workers=args.workers)
    result = replication_study(args.scenarios, args.n, args.reps,
                               args.methods, study)
    for scenario in args.scenarios:
        line = [f"S{scenario}:"]
        for method in args.methods:
            cell = result.raw[(scenario, args.n[0], method)]
            line.append(f"{method} {np.nanmean(cell['dic']):.1f}")
        print("  ".join(line))


if __name__ == "__main__":
    main()
