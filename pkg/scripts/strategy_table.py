#!/usr/bin/env python3
"""Print a side-by-side cost/load table for all four delivery strategies.

One configuration, many trials, shared request traces per trial index, so
the columns are directly comparable.
"""

import argparse
import sys

from codedlb.harness import PointConfig, run_point
from codedlb.metrics import aggregate


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=225)
    parser.add_argument("--k", type=int, default=100)
    parser.add_argument("--m", type=int, default=1)
    parser.add_argument("--ell", type=int, default=8)
    parser.add_argument("--gamma", type=float, default=0.0)
    parser.add_argument("--trials", type=int, default=200)
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=None)
    args = parser.parse_args()

    print(f"n={args.n} k={args.k} m={args.m} ell={args.ell} "
          f"gamma={args.gamma} trials={args.trials}")
    print(f"{'strategy':<16}{'comm_cost':>12}{'max_load':>12}{'fail_rate':>12}")
    for strategy in ("nearest", "two-choice", "coded", "uncoded-chunks"):
        point = PointConfig(
            n=args.n, k=args.k, m_cache=args.m, ell=args.ell,
            gamma=args.gamma, strategy=strategy,
        )
        agg = aggregate(run_point(point, args.trials, args.seed, args.workers))
        print(f"{strategy:<16}{agg.comm_cost_mean:>12.4f}"
              f"{agg.max_load_mean:>12.4f}{agg.failure_rate:>12.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
