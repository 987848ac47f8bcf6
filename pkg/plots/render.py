#!/usr/bin/env python3
"""Render convergence figures from experiment CSV files.

Reads the versioned experiment CSV schema (a `#`-comment header line
followed by a standard CSV table) and draws, for the selected statistic,
the scaled mean with 2-standard-error bars against the tree size, plus a
horizontal line at the limit value.

Usage:
    python3 plots/render.py --csv results.csv --stat K --out figure.png
"""

from __future__ import annotations

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

REQUIRED_COLUMNS = ("family", "k", "n", "stat", "scaled_mean", "stderr",
                    "limit_value")


class SchemaError(Exception):
    """The CSV does not conform to the experiment schema."""


class NoDataError(Exception):
    """The CSV holds no rows for the requested statistic."""


def load_rows(path: str) -> list[dict]:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file, no CSV header")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        return list(reader)


def select(rows: list[dict], stat: str) -> list[dict]:
    picked = []
    for row in rows:
        if row["stat"] != stat or not row["scaled_mean"]:
            continue
        picked.append({
            "n": int(row["n"]),
            "scaled_mean": float(row["scaled_mean"]),
            "stderr": float(row["stderr"]) if row["stderr"] else 0.0,
            "limit_value": (float(row["limit_value"])
                            if row["limit_value"] else None),
            "family": row["family"],
            "k": row["k"],
        })
    if not picked:
        raise NoDataError(f"no rows with stat={stat!r} and a scaled mean")
    picked.sort(key=lambda r: r["n"])
    return picked


def render(csv_path: str, stat: str, out_path: str, log_x: bool = True) -> None:
    rows = select(load_rows(csv_path), stat)
    ns = [r["n"] for r in rows]
    means = [r["scaled_mean"] for r in rows]
    bars = [2.0 * r["stderr"] for r in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ns, means, yerr=bars, fmt="o-", capsize=3,
                label=f"scaled mean of {stat}")
    limit = rows[-1]["limit_value"]
    if limit is not None:
        ax.axhline(limit, color="crimson", linestyle="--",
                   label=f"limit {limit:.4f}")
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel(f"scaled {stat}")
    ax.set_title(f"{rows[0]['family']}, k={rows[0]['k']}: {stat}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--csv", required=True, help="experiment CSV file")
    ap.add_argument("--stat", required=True,
                    help="statistic to plot: K or K_r (e.g. K_1, K_2)")
    ap.add_argument("--out", required=True, help="output PNG path")
    ap.add_argument("--linear-x", action="store_true",
                    help="use a linear instead of log x axis")
    args = ap.parse_args(argv)
    try:
        render(args.csv, args.stat, args.out, log_x=not args.linear_x)
    except (SchemaError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
