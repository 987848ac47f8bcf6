#!/usr/bin/env python3
"""Scaled record counts on log-height tree families.

Runs recursive trees, binary search trees and preferential-attachment
trees over a size sweep; all three share the (log n)^{r/k}/n scaling
with family-specific depth constants.

    python3 scripts/log_height_sweep.py --family recursive --out rec.csv
"""

import argparse

from kcut.generators import FamilySpec
from kcut.harness import ExperimentConfig, run_experiment


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=["recursive", "bst", "preferential"],
                    default="recursive")
    ap.add_argument("--alpha", type=float, default=0.0,
                    help="preferential-attachment weight offset")
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[10_000, 100_000, 1_000_000])
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--threads", type=int, default=0)
    ap.add_argument("--out", default="log_height_sweep.csv")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        family=FamilySpec(family=args.family, alpha=args.alpha), k=args.k,
        sizes=tuple(sorted(args.sizes)), replicates=args.reps,
        mode="records", master_seed=args.seed, out=args.out)
    rows, errors = run_experiment(cfg, threads=args.threads)
    for row in rows:
        if row["stat"] == "K":
            print(f"n={row['n']:>8} scaled={row['scaled_mean']:.6f} "
                  f"limit={row['limit_value']:.6f} rel={row['rel_dev']:+.4f}")
    print(f"wrote {args.out}")
    return 2 if errors else 0


if __name__ == "__main__":
    raise SystemExit(main())
