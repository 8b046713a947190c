#!/usr/bin/env python3
"""Replication table for the population-mean estimators.

Runs the chosen scenarios at the study chain lengths (2000 burn-in, 3000
kept) and prints RMSE/bias of the mean estimate per method, all x100.
Example:

    python scripts/run_table1.py --scenarios 1 4 --n 500 --reps 200 \
        --methods OR CC LR SR NR --out table1.csv
"""

import argparse

from pgmnar.dataio import write_metrics_csv
from pgmnar.evaluation import StudyConfig, replication_study


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenarios", nargs="+", type=int, default=[1])
    ap.add_argument("--n", nargs="+", type=int, default=[500])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--methods", nargs="+", default=["OR", "CC", "LR", "SR"])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--burn", type=int, default=2000)
    ap.add_argument("--keep", type=int, default=3000)
    ap.add_argument("--random-covariates", action="store_true")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default=None, help="also write metrics CSV here")
    args = ap.parse_args()

    study = StudyConfig(n_burn=args.burn, n_keep=args.keep,
                        master_seed=args.seed, workers=args.workers,
                        fixed_covariates=not args.random_covariates)
    result = replication_study(args.scenarios, args.n, args.reps,
                               args.methods, study)

    print(f"{'scen':>4} {'n':>5} {'method':>6} {'rmse':>7} {'bias':>7} "
          f"{'cp':>6} {'al':>6} {'dic':>9}")
    for row in result.rows:
        dic = "" if row.dic_mean != row.dic_mean else f"{row.dic_mean:9.1f}"
        print(f"{row.scenario:>4} {row.n:>5} {row.method:>6} "
              f"{row.mu_rmse:7.2f} {row.mu_bias:+7.2f} "
              f"{row.mu_cp:6.1f} {row.mu_al:6.2f} {dic}")
    if args.out:
        write_metrics_csv(result.rows, args.out)
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
