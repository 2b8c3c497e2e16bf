"""Command line front end: ``normreg <subcommand> ...``."""
import argparse
import json
import logging
import math
import sys

import numpy as np

from . import bern, experiment
from .algo1 import run_algorithm1
from .dist import DistributionSpec, derive_seed, sample_matrix
from .linalg import load_matrix, operator_norm, operator_norm_oracle, save_matrix
from .trim import (default_threshold, trim_threshold_rows_cols, trim_topk_rows_cols,
                   truncate_entries)


def _dist_args(p):
    p.add_argument("--dist", default="gaussian",
                   choices=["gaussian", "signed_bernoulli", "symmetric_pareto"])
    p.add_argument("--p", type=float, default=None, help="signed_bernoulli density")
    p.add_argument("--alpha", type=float, default=None, help="symmetric_pareto tail exponent")
    p.add_argument("--no-normalize", action="store_true")


def _norm_args(p):
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=10_000)


def _dump(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default)
    if path:
        with open(path, "w") as f:
            f.write(text + "\n")
    else:
        print(text)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def cmd_gen(args):
    spec = DistributionSpec(args.dist, args.p, args.alpha, not args.no_normalize)
    rng = np.random.Generator(np.random.PCG64(derive_seed(args.seed, args.trial, "matrix")))
    save_matrix(args.out, sample_matrix(spec, args.n, rng))


def cmd_norm(args):
    A = load_matrix(args.input)
    est = operator_norm(A, tol=args.tol, max_iters=args.max_iters, seed=args.seed,
                        full_output=True)
    out = {"norm": est.value, "converged": est.converged, "iterations": est.iterations,
           "ratio_sqrt_n": est.value / math.sqrt(A.shape[0])}
    if args.oracle:
        out["oracle"] = operator_norm_oracle(A)
    _dump(out, None)


def cmd_trim(args):
    A = load_matrix(args.input)
    kw = {"norm_kw": {"tol": args.tol, "max_iters": args.max_iters}}
    if args.method == "topk":
        out, rep = trim_topk_rows_cols(A, args.eps, **kw)
    elif args.method == "threshold":
        thr = args.threshold
        if thr is None:
            if args.eps is None:
                raise SystemExit("threshold needs --threshold or --eps")
            thr = default_threshold(args.eps, A.shape[0], args.C)
        out, rep = trim_threshold_rows_cols(A, thr, epsilon=args.eps, **kw)
    else:
        level = args.level if args.level is not None else math.sqrt(A.shape[0])
        out, rep = truncate_entries(A, level, epsilon=args.eps, **kw)
    if args.out:
        save_matrix(args.out, out)
    _dump(rep.to_dict(), args.report)


def cmd_algo1(args):
    A = load_matrix(args.input)
    out, rep = run_algorithm1(A, args.eps, c_eps_override=args.c_eps,
                              l_max_override=args.l_max,
                              norm_kw={"tol": args.tol, "max_iters": args.max_iters})
    if args.out:
        save_matrix(args.out, out)
    if args.report:
        _dump(rep.to_dict(), args.report)
    n = A.shape[0]
    print(f"n={n} eps={rep.epsilon:g} c_eps={rep.c_epsilon:.6g} l_max={rep.l_max}")
    print(f"{'level':>5} {'t_l':>10} {'heavy cols':>10} {'|J_l|':>6} {'heavy rows':>10} {'|I_l|':>6}")
    for c, r in zip(rep.column_diagnostics, rep.row_diagnostics):
        print(f"{c.level:>5} {c.threshold:>10.4g} {c.heavy_columns:>10} {c.selected:>6} "
              f"{r.heavy_columns:>10} {r.selected:>6}")
    print(f"step1 entries {len(rep.step1_entries)}  |J_hat|={len(rep.J_hat)} "
          f"|I_hat|={len(rep.I_hat)}  |J|={len(rep.J)} |I|={len(rep.I)}")
    print(f"changed entries {rep.entries_changed}  rows {rep.rows_touched} "
          f"(limit {math.ceil(rep.epsilon * n)})  cols {rep.cols_touched}")
    print(f"norm {rep.norm_before:.6g} -> {rep.norm_after:.6g}")


def cmd_bern(args):
    if args.action == "sample":
        if args.seed is None:
            raise SystemExit("--seed is required for sampling")
        rng = np.random.Generator(np.random.PCG64(derive_seed(args.seed, args.trial, "bernoulli")))
        B = bern.sample_bernoulli(args.n, args.p, args.signed, rng)
        text = B.to_text()
        if args.out:
            with open(args.out, "w") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        return
    with open(args.input) as f:
        B = bern.SparsePattern.from_text(f.read())
    p = args.p if args.p is not None else B.p
    if args.action == "trim":
        thr = args.threshold if args.threshold is not None else args.C * B.n * p
        out, rep = bern.degree_trim(B, thr)
        if args.out:
            with open(args.out, "w") as f:
                f.write(out.to_text())
        _dump(rep.to_dict(), args.report)
    elif args.action == "weightcut":
        cut = bern.weight_column_cut(B, p, args.L)
        _dump({"J": cut.J, "cutoff": cut.cutoff, "card_bound": cut.card_bound,
               "card_ok": cut.card_ok, "residual_max": cut.residual_max,
               "residual_bound": cut.residual_bound, "residual_ok": cut.residual_ok},
              args.report)
    else:
        res = bern.discrepancy_check(B, p, args.C1, args.C2)
        S, T, e, margin = res.worst
        _dump({"all_pairs_ok": res.all_pairs_ok,
               "worst": {"S": S, "T": T, "e": e, "margin": margin},
               "c_equal": res.c_equal, "c2_at_c1": res.c2_at_c1, "c1_at_c2": res.c1_at_c2,
               "frontier": res.frontier}, args.report)


def cmd_sweep(args):
    with open(args.config) as f:
        cfg = json.load(f)
    if args.out:
        cfg["output"] = args.out
    if args.workers is not None:
        cfg["workers"] = args.workers
    config = experiment.ExperimentConfig.from_dict(cfg)
    rows = experiment.run_sweep(config)
    if not config.output:
        sys.stdout.write(experiment.rows_to_csv(rows))
    else:
        print(experiment.format_summary(experiment.summarize(rows)), file=sys.stderr)


def cmd_summarize(args):
    table = experiment.summarize(experiment.read_csv(args.input))
    if args.json:
        _dump(table, None)
    else:
        print(experiment.format_summary(table))


def build_parser():
    ap = argparse.ArgumentParser(prog="normreg", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample an n x n matrix")
    _dist_args(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--out", required=True, help=".csv for text, anything else for binary")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("norm", help="estimate the operator norm of a stored matrix")
    p.add_argument("input")
    _norm_args(p)
    p.add_argument("--seed", type=int, default=0, help="power-iteration restart seed")
    p.add_argument("--oracle", action="store_true", help="also run the Jacobi oracle (n <= 64)")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("trim", help="row/column or entrywise regularization")
    p.add_argument("method", choices=["topk", "threshold", "truncate"])
    p.add_argument("input")
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--C", type=float, default=2.0, help="threshold = C sqrt(c_eps n)")
    p.add_argument("--level", type=float, default=None, help="truncation level (default sqrt n)")
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    _norm_args(p)
    p.set_defaults(func=cmd_trim)

    p = sub.add_parser("algo1", help="submatrix-localizing regularization")
    p.add_argument("input")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--c-eps", type=float, default=None)
    p.add_argument("--l-max", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    _norm_args(p)
    p.set_defaults(func=cmd_algo1)

    p = sub.add_parser("bern", help="sparse Bernoulli tools")
    p.add_argument("action", choices=["sample", "trim", "weightcut", "discrepancy"])
    p.add_argument("--input", default=None)
    p.add_argument("-n", type=int, default=None)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--signed", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trial", type=int, default=0)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--C", type=float, default=20.0, help="degree threshold = C n p")
    p.add_argument("--L", type=float, default=10.0)
    p.add_argument("--C1", type=float, default=2.0)
    p.add_argument("--C2", type=float, default=2.0)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_bern)

    p = sub.add_parser("sweep", help="run an ExperimentConfig JSON document")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("summarize", help="group a sweep CSV by (method, n, epsilon)")
    p.add_argument("input")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_summarize)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "bern" and args.action != "sample" and not args.input:
        raise SystemExit(f"bern {args.action} needs --input")
    if args.command == "bern" and args.action == "sample" and (args.n is None or args.p is None):
        raise SystemExit("bern sample needs -n and --p")
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
