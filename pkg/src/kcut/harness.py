"""Reproducible experiment runner.

Sweeps a tree family over sizes, runs replicates (in parallel if asked),
aggregates statistics in a fixed order, scales them per the family's
limit theorem and writes versioned CSV.  Replicate j at size index i
always draws from SeedSequence(entropy=master_seed, spawn_key=(i, j)),
so the sample stream never depends on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from kcut.generators import FamilySpec, OffspringDist
from kcut.limits import LimitSpec
from kcut.tree import profile
from kcut import cutting

SCHEMA_HEADER = "# kcut-experiment-csv v1"
CSV_COLUMNS = ["family", "k", "n", "mode", "stat", "mean", "stderr",
               "scaled_mean", "limit_value", "rel_dev", "reps", "seed"]

THREADS_ENV = "KCUT_THREADS"


@dataclass(frozen=True)
class ExperimentConfig:
    family: FamilySpec
    k: int
    sizes: tuple[int, ...]
    replicates: int
    mode: str                      # process | records | exact-profile
    master_seed: int
    second_moment: bool = False
    sigma: float | None = None     # offspring std dev override for scaling
    out: str | None = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if list(self.sizes) != sorted(set(self.sizes)):
            raise ValueError("sizes must be strictly increasing")
        if self.mode not in ("process", "records", "exact-profile"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")

    def limit_spec(self) -> LimitSpec:
        fam = self.family
        sigma = self.sigma
        if sigma is None:
            dist = fam.offspring or OffspringDist.poisson1()
            sigma = math.sqrt(dist.variance) if fam.family == "cgw" else 1.0
        return LimitSpec(
            family=fam.family, k=self.k, sigma=sigma,
            beta=(1.0 + fam.alpha) / (2.0 + fam.alpha),
            degrees=tuple(d for d, _ in fam.components))

    @staticmethod
    def from_json(doc: dict) -> "ExperimentConfig":
        offspring = None
        if "offspring" in doc:
            name = doc["offspring"]
            if name == "poisson1":
                offspring = OffspringDist.poisson1()
            elif name == "geometric_half":
                offspring = OffspringDist.geometric_half()
            else:
                offspring = OffspringDist.custom(name)
        fam = FamilySpec(
            family=doc["family"], n=0, alpha=float(doc.get("alpha", 0.0)),
            offspring=offspring,
            components=tuple(tuple(c) for c in doc.get("components", [])))
        return ExperimentConfig(
            family=fam, k=int(doc["k"]),
            sizes=tuple(int(n) for n in doc["sizes"]),
            replicates=int(doc.get("replicates", 1)),
            mode=doc.get("mode", "records"),
            master_seed=int(doc.get("seed", 0)),
            second_moment=bool(doc.get("second_moment", False)),
            sigma=doc.get("sigma"), out=doc.get("out"))


@dataclass(frozen=True)
class MomentEstimate:
    count: int
    mean: float
    stderr: float
    raw_m2: float
    raw_m4: float
    scaled_mean: float


def _replicate_seed(master: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master, spawn_key=(i, j)))


def _run_chunk(args) -> tuple[int, int, np.ndarray]:
    """Replicates [j0, j1) at size index i; returns the per-replicate
    statistic matrix in replicate order."""
    cfg, i, n, j0, j1 = args
    k = cfg.k
    fam = replace(cfg.family, n=n)
    want_sq = cfg.second_moment and n <= 200
    cols = 1 + (k if cfg.mode != "process" else 0) + (1 if want_sq else 0)
    out = np.empty((j1 - j0, cols))
    for j in range(j0, j1):
        rng = _replicate_seed(cfg.master_seed, i, j)
        t = fam.generate(rng)
        if cfg.mode == "process":
            out[j - j0, 0] = cutting.simulate_cut_process(t, k, rng).total_cuts
        elif cfg.mode == "records":
            rec = cutting.simulate_records(t, k, rng).records_per_rank
            row = [rec.sum(), *rec]
            if want_sq:
                row.append(rec[0] ** 2)
            out[j - j0] = row
        else:
            pr = profile(t)
            means = [cutting.exact_mean_records(pr, k, r)
                     for r in range(1, k + 1)]
            row = [sum(means), *means]
            if want_sq:
                row.append(cutting.exact_second_moment_k1(t, k)
                           if k >= 2 else math.nan)
            out[j - j0] = row
    return i, j0, out


def _stat_names(cfg: ExperimentConfig, n: int) -> list[str]:
    names = ["K"]
    if cfg.mode != "process":
        names += [f"K_{r}" for r in range(1, cfg.k + 1)]
    if cfg.second_moment and n <= 200 and cfg.mode != "process":
        names.append("K_1^2")
    return names


def run_experiment(cfg: ExperimentConfig, threads: int = 0):
    """Run the sweep; returns (rows, errors).  rows are CSV dicts."""
    if threads <= 0:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    lspec = cfg.limit_spec()
    rows: list[dict] = []
    errors: list[tuple[int, str]] = []

    for i, n in enumerate(cfg.sizes):
        reps = cfg.replicates
        if cfg.mode == "exact-profile" and cfg.family.deterministic:
            reps = 1
        chunk = max(1, math.ceil(reps / 128))
        tasks = [(cfg, i, n, j0, min(j0 + chunk, reps))
                 for j0 in range(0, reps, chunk)]
        try:
            if threads > 1 and len(tasks) > 1:
                with ProcessPoolExecutor(max_workers=threads) as pool:
                    parts = list(pool.map(_run_chunk, tasks))
            else:
                parts = [_run_chunk(t) for t in tasks]
        except Exception as exc:  # noqa: BLE001 - error row per contract
            errors.append((n, str(exc)))
            rows.append(_error_row(cfg, n))
            continue
        parts.sort(key=lambda p: p[1])          # indexed reduction
        vals = np.vstack([p[2] for p in parts])
        exact_det = cfg.mode == "exact-profile" and cfg.family.deterministic
        for col, stat in enumerate(_stat_names(cfg, n)):
            v = vals[:, col]
            est = _estimate(v, exact_det)
            rows.append(_stat_row(cfg, lspec, n, stat, est, reps))
    if cfg.out:
        write_csv(rows, cfg.out)
    return rows, errors


def _estimate(v: np.ndarray, exact: bool) -> MomentEstimate:
    count = len(v)
    mean = float(v.mean())
    stderr = 0.0
    if not exact and count > 1:
        stderr = float(v.std(ddof=1) / math.sqrt(count))
    return MomentEstimate(count=count, mean=mean, stderr=stderr,
                          raw_m2=float((v ** 2).mean()),
                          raw_m4=float((v ** 4).mean()),
                          scaled_mean=math.nan)


def _stat_row(cfg, lspec: LimitSpec, n: int, stat: str,
              est: MomentEstimate, reps: int) -> dict:
    if stat == "K_1^2":
        scaled = limit = rel = None
    else:
        scale = lspec.scaling_factor(n, stat)
        scaled = est.mean * scale
        limit = lspec.limit_value(stat)
        rel = (scaled - limit) / limit if limit else None
    return {
        "family": cfg.family.family, "k": cfg.k, "n": n, "mode": cfg.mode,
        "stat": stat, "mean": est.mean, "stderr": est.stderr,
        "scaled_mean": scaled, "limit_value": limit, "rel_dev": rel,
        "reps": reps, "seed": cfg.master_seed,
    }


def _error_row(cfg, n: int) -> dict:
    return {"family": cfg.family.family, "k": cfg.k, "n": n,
            "mode": cfg.mode, "stat": "error", "mean": None, "stderr": None,
            "scaled_mean": None, "limit_value": None, "rel_dev": None,
            "reps": 0, "seed": cfg.master_seed}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(SCHEMA_HEADER + "\n")
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])


def read_csv(path: str) -> list[dict]:
    rows = []
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            fh.seek(0)
        reader = csv.DictReader(fh)
        for row in reader:
            rows.append(row)
    return rows


def compare_to_limit(rows: list[dict], lspec: LimitSpec) -> dict:
    """Per-statistic convergence report with a monotone-trend verdict."""
    stats: dict[str, list] = {}
    for row in rows:
        stat = row["stat"]
        if stat in ("error", "K_1^2"):
            continue
        n = int(row["n"])
        mean = float(row["mean"])
        scale = lspec.scaling_factor(n, stat)
        limit = lspec.limit_value(stat)
        scaled = mean * scale
        rel = (scaled - limit) / limit if limit else None
        stats.setdefault(stat, []).append(
            {"n": n, "scaled_mean": scaled, "limit_value": limit,
             "rel_dev": rel})
    report = {}
    for stat, entries in stats.items():
        entries.sort(key=lambda e: e["n"])
        rels = [abs(e["rel_dev"]) for e in entries if e["rel_dev"] is not None]
        trend = (len(rels) >= 2
                 and all(b < a for a, b in zip(rels[:-1], rels[1:])))
        report[stat] = {"entries": entries, "decreasing_rel_dev": trend}
    return report


def config_from_file(path: str) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(json.load(fh))
