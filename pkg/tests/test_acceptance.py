"""End-to-end acceptance checks.

One test per criterion; each prints a single PASS/FAIL line with the
measured quantities.  Statistical checks use frozen seeds so the suite
is deterministic.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats as sstats

from kcut.cutting import (
    exact_mean_records,
    exact_mean_total,
    exact_second_moment_k1,
    simulate_cut_process_many,
    simulate_records_many,
)
from kcut.generators import (
    FamilySpec,
    OffspringDist,
    gen_bst,
    gen_cgw,
    gen_complete_binary,
    gen_path,
)
from kcut.harness import ExperimentConfig, run_experiment, write_csv
from kcut.limits import (
    eta,
    eta_k1_closed,
    kr_limit_cgw,
    loght_limit,
    ordered_gamma_probability,
    rayleigh_moment,
)
from kcut.tree import Profile, build_tree, dfs_walk, profile


RESULT_LINES: list[str] = []


def report(name: str, ok: bool, detail: str) -> None:
    line = f"{name} {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    RESULT_LINES.append(line)      # echoed in the terminal summary
    assert ok, f"{name}: {detail}"


def mc_mean_stderr(v: np.ndarray) -> tuple[float, float]:
    v = v.astype(float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def test_A1_two_oracle_identity_tiny_tree():
    t0 = time.time()
    rng = np.random.default_rng(0)
    p2 = gen_path(2)
    mean, se = mc_mean_stderr(simulate_cut_process_many(p2, 2, 10 ** 6, rng))
    exact = sum(exact_mean_records(profile(p2), 2, r) for r in (1, 2))
    elapsed = time.time() - t0
    ok = (abs(mean - 3.25) < 3 * se and abs(exact - 3.25) < 1e-8
          and elapsed < 10)
    report("A1", ok, f"process mean {mean:.4f} (3se {3 * se:.4f}), "
                     f"exact sum {exact:.10f}, {elapsed:.1f}s")


def test_A2_route_equivalence():
    t0 = time.time()
    trees = [gen_path(50), gen_complete_binary(63),
             gen_cgw(100, OffspringDist.poisson1(), np.random.default_rng(5))]
    rng = np.random.default_rng(2024)
    worst = 0.0
    for t in trees:
        for k in (2, 3):
            a, sa = mc_mean_stderr(simulate_cut_process_many(t, k, 10 ** 5, rng))
            totals = simulate_records_many(t, k, 10 ** 5, rng).sum(axis=1)
            b, sb = mc_mean_stderr(totals)
            dev = abs(a - b) / math.hypot(sa, sb)
            worst = max(worst, dev)
    elapsed = time.time() - t0
    ok = worst < 3.0 and elapsed < 120
    report("A2", ok, f"worst deviation {worst:.2f} combined stderr over "
                     f"6 configs, {elapsed:.0f}s")


def test_A3_closed_constants():
    devs = []
    ok = (abs(eta_k1_closed(1) - math.sqrt(math.pi / 2)) < 1e-12
          and abs(loght_limit(2) - math.sqrt(math.pi / 2)) < 1e-12)
    rng = np.random.default_rng(6)
    for q in (1, 2):
        est = eta(1, q, 10 ** 6, rng)
        dev = abs(est.value - rayleigh_moment(q)) / (3 * est.error + 1e-9)
        devs.append(dev)
        ok = ok and dev < 1.0
    est = eta(2, 1, 10 ** 6, rng)
    dev = abs(est.value - eta_k1_closed(2)) / (3 * est.error + 1e-9)
    devs.append(dev)
    ok = ok and dev < 1.0
    report("A3", ok, "closed identities to 1e-12; MC devs/3se "
                     + ", ".join(f"{d:.2f}" for d in devs))


def test_A4_gamma_ordering():
    rng = np.random.default_rng(12)
    ok = True
    details = []
    for k in (2, 5):
        for q, target in ((2, 0.5), (3, 1.0 / 6.0)):
            est = ordered_gamma_probability(q, k, 10 ** 6, rng)
            dev = abs(est.value - target)
            ok = ok and dev < 3 * est.error + 1e-9
            details.append(f"k={k},q={q}: {est.value:.5f}")
    report("A4", ok, "; ".join(details) + " vs 1/2, 1/6")


def test_A5_path_limit():
    t0 = time.time()
    cfg = ExperimentConfig(
        family=FamilySpec(family="path"), k=2, sizes=(100, 10 ** 4, 10 ** 6),
        replicates=1, mode="exact-profile", master_seed=0)
    rows, errors = run_experiment(cfg)
    rels = [abs(r["rel_dev"]) for r in rows if r["stat"] == "K"]
    elapsed = time.time() - t0
    ok = (not errors and all(b < a for a, b in zip(rels, rels[1:]))
          and rels[-1] < 0.05 and elapsed < 60)
    report("A5", ok, "|rel_dev| " + " -> ".join(f"{r:.4f}" for r in rels)
                     + f" vs sqrt(2*pi), {elapsed:.0f}s")


def test_A6_complete_binary_trend():
    rels = []
    target = math.sqrt(math.pi / 2)
    for h in (10, 20, 30):
        n = 2 ** (h + 1) - 1
        pr = Profile(counts=np.array([2 ** i for i in range(h + 1)],
                                     dtype=np.int64), n=n)
        scaled = exact_mean_total(pr, 2) * math.sqrt(math.log2(n)) / n
        rels.append(abs(scaled - target) / target)
    ok = all(b < a for a, b in zip(rels, rels[1:]))
    report("A6", ok, "|rel_dev| " + " -> ".join(f"{r:.4f}" for r in rels)
                     + " strictly decreasing in height")


def test_A7_cgw_scaling_trend():
    t0 = time.time()
    cfg = ExperimentConfig(
        family=FamilySpec(family="cgw", offspring=OffspringDist.poisson1()),
        k=2, sizes=(10 ** 3, 10 ** 4, 10 ** 5), replicates=300,
        mode="records", master_seed=20260823)
    rows, errors = run_experiment(cfg, threads=4)
    rel_k = [abs(r["rel_dev"]) for r in rows if r["stat"] == "K"]
    rel_k2 = [abs(r["rel_dev"]) for r in rows if r["stat"] == "K_2"]
    elapsed = time.time() - t0
    ok = (not errors
          and all(b < a for a, b in zip(rel_k, rel_k[1:]))
          and rel_k[-1] < 0.15 and rel_k2[-1] < 0.15 and elapsed < 1200)
    report("A7", ok,
           "K |rel_dev| " + " -> ".join(f"{r:.3f}" for r in rel_k)
           + f" vs {eta_k1_closed(2):.4f}; K_2 final {rel_k2[-1]:.3f}"
           + f" vs {kr_limit_cgw(2, 2, 1.0):.4f}; {elapsed:.0f}s")


def test_A8_second_moment_oracle():
    rng = np.random.default_rng(11)
    ok = True
    details = []
    for t, label in ((gen_path(2), "path2"), (build_tree([-1, 0, 0]), "star3")):
        want = exact_second_moment_k1(t, 2)
        sq = simulate_records_many(t, 2, 10 ** 6, rng)[:, 0].astype(float) ** 2
        mean, se = mc_mean_stderr(sq)
        ok = ok and abs(mean - want) < 3 * se
        details.append(f"{label}: exact {want:.5f} mc {mean:.5f}")
    report("A8", ok, "; ".join(details))


def test_A9_sampler_laws():
    rng = np.random.default_rng(99)
    reps = 10 ** 5
    counts: dict[tuple, int] = {}
    for _ in range(reps):
        t = gen_cgw(4, OffspringDist.geometric_half(), rng)
        key = tuple(int(x) for x in dfs_walk(t).values)
        counts[key] = counts.get(key, 0) + 1
    ok = len(counts) == 5
    res = sstats.chisquare(list(counts.values()))
    ok = ok and res.pvalue > 1e-3

    balanced = sum(int(gen_bst(3, rng).max_depth() == 1) for _ in range(reps))
    p = balanced / reps
    se = math.sqrt(p * (1 - p) / reps)
    ok = ok and abs(p - 2 / 6) < 3 * se
    report("A9", ok, f"cgw n=4: 5 shapes, chi2 p={res.pvalue:.3f}; "
                     f"bst balanced freq {p:.4f} vs 1/3")


def test_A10_worker_count_determinism(tmp_path):
    cfg = ExperimentConfig(
        family=FamilySpec(family="cgw", offspring=OffspringDist.poisson1()),
        k=2, sizes=(10 ** 3,), replicates=100, mode="records",
        master_seed=31337)
    blobs = []
    for threads in (1, 4, 16):
        rows, errors = run_experiment(cfg, threads=threads)
        assert not errors
        path = tmp_path / f"w{threads}.csv"
        write_csv(rows, str(path))
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    report("A10", ok, f"CSV bytes identical across 1/4/16 workers "
                      f"({len(blobs[0])} bytes)")


def test_A11_log_height_universality():
    target = math.sqrt(math.pi / 2)
    ok = True
    details = []
    for family in ("recursive", "bst"):
        cfg = ExperimentConfig(
            family=FamilySpec(family=family), k=2,
            sizes=(10 ** 4, 10 ** 5, 10 ** 6), replicates=200,
            mode="records", master_seed=7)
        rows, errors = run_experiment(cfg, threads=4)
        rels = [abs(r["rel_dev"]) for r in rows if r["stat"] == "K"]
        ok = ok and not errors and all(b < a for a, b in zip(rels, rels[1:]))
        details.append(family + " " + " -> ".join(f"{r:.3f}" for r in rels))
    report("A11", ok, "|rel_dev| vs "
                      f"{target:.4f}: " + "; ".join(details))
