"""Command-line front end: generate / cut / exact / limit / experiment."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from kcut import cutting, harness, limits
from kcut.generators import FamilySpec, OffspringDist
from kcut.tree import profile, read_tree, write_tree


def _add_family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", choices=["path", "complete_binary",
                                        "complete_regular", "mixture", "cgw",
                                        "recursive", "preferential", "bst"])
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--d", type=int, action="append", default=[],
                   help="component degree (repeatable for mixtures)")
    p.add_argument("--height", type=int, action="append", default=[],
                   help="component height (pairs up with --d)")
    p.add_argument("--offspring", default="poisson1",
                   choices=["poisson1", "geometric_half"])
    p.add_argument("--seed", type=int, default=0)


def _family_from_args(args) -> FamilySpec:
    if args.family is None:
        raise SystemExit("--family is required")
    offspring = (OffspringDist.geometric_half()
                 if args.offspring == "geometric_half"
                 else OffspringDist.poisson1())
    if args.family == "complete_regular":
        if len(args.d) != 1 or len(args.height) != 1:
            raise SystemExit("complete_regular needs one --d and one --height")
        return FamilySpec(family="mixture",
                          components=((args.d[0], args.height[0]),))
    components = tuple(zip(args.d, args.height))
    return FamilySpec(family=args.family, n=args.n, alpha=args.alpha,
                      offspring=offspring, components=components)


def _tree_from_args(args):
    if getattr(args, "tree", None):
        return read_tree(args.tree)
    fam = _family_from_args(args)
    rng = np.random.default_rng(args.seed)
    return fam.generate(rng)


def cmd_generate(args) -> int:
    t = _tree_from_args(args)
    write_tree(t, args.out)
    return 0


def cmd_cut(args) -> int:
    t = _tree_from_args(args)
    k = args.k
    modes = ["process", "records"] if args.mode == "both" else [args.mode]
    lines = ["mode,rep," + ",".join(["K"] + [f"K_{r}" for r in range(1, k + 1)])]
    rng = np.random.default_rng(args.seed)
    for mode in modes:
        for rep in range(args.reps):
            if mode == "process":
                total = cutting.simulate_cut_process(t, k, rng).total_cuts
                lines.append(f"process,{rep},{total}" + "," * k)
            else:
                rec = cutting.simulate_records(t, k, rng).records_per_rank
                lines.append(f"records,{rep},{rec.sum()},"
                             + ",".join(str(int(x)) for x in rec))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_exact(args) -> int:
    t = _tree_from_args(args)
    pr = profile(t)
    out = {f"K_{r}": cutting.exact_mean_records(pr, args.k, r)
           for r in range(1, args.k + 1)}
    out["K"] = sum(out.values())
    print(json.dumps(out))
    return 0


def cmd_limit(args) -> int:
    rng = np.random.default_rng(args.seed)
    k, q, r = args.k, args.q, args.r
    if args.what == "eta1":
        res = limits.LimitEstimate(limits.eta_k1_closed(k), 1e-15, "closed")
    elif args.what == "eta":
        res = limits.eta(k, q, args.budget, rng)
    elif args.what == "m-path":
        res = limits.m_q(limits.PiecewiseLinearWalk.tent(), k, q,
                         rng=rng if q >= 3 else None)
    elif args.what == "loght":
        res = limits.LimitEstimate(limits.loght_limit(k), 1e-15, "closed")
    elif args.what == "kr-cgw":
        res = limits.LimitEstimate(limits.kr_limit_cgw(k, r, args.sigma),
                                   1e-15, "closed")
    elif args.what == "zzeta":
        degrees = [int(d) for d in args.degrees.split(",")] if args.degrees else [2]
        atoms = [1.0 / math.log(d) for d in degrees]
        probs = [1.0 / len(atoms)] * len(atoms)
        res = limits.z_zeta_moments(atoms, probs, k, q, args.budget, rng)
    elif args.what == "exc-moment":
        res = limits.LimitEstimate(limits.excursion_inverse_moment(k, r),
                                   1e-15, "closed")
    else:
        raise SystemExit(f"unknown --what {args.what!r}")
    print(json.dumps({"value": res.value, "error_estimate": res.error,
                      "method": res.method}))
    return 0


def cmd_experiment(args) -> int:
    cfg = harness.config_from_file(args.config)
    if args.out:
        cfg = harness.ExperimentConfig(
            **{**cfg.__dict__, "out": args.out})
    rows, errors = harness.run_experiment(cfg, threads=args.threads)
    if not cfg.out:
        harness.write_csv(rows, "/dev/stdout")
    for n, msg in errors:
        print(f"error at n={n}: {msg}", file=sys.stderr)
    return 2 if errors else 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kcut")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("generate", help="write a tree in parent format")
    _add_family_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("cut", help="simulate the cutting process / records")
    _add_family_args(p)
    p.add_argument("--tree")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--mode", choices=["process", "records", "both"],
                   default="process")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_cut)

    p = sub.add_parser("exact", help="exact E[K_r | tree] by quadrature")
    _add_family_args(p)
    p.add_argument("--tree")
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("limit", help="limit constants and moments")
    p.add_argument("--what", required=True,
                   choices=["eta", "eta1", "m-path", "loght", "kr-cgw",
                            "zzeta", "exc-moment"])
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--budget", type=int, default=10 ** 6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degrees", default="")
    p.set_defaults(fn=cmd_limit)

    p = sub.add_parser("experiment", help="run a config-driven sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_experiment)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
