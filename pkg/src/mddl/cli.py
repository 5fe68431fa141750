"""Command-line interface.

Subcommands:

    transform   apply a transform suite to a source dictionary and write the
                per-domain manifests plus the assembled multi-domain one
    solve       solve a single query and emit the result as JSON
    classify    classify a batch of queries, one JSON line per sample
    bench       run an experiment spec and/or the runtime scaling sweep
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .backend import ACTIVE_BACKEND
from .classify import classify
from .dictionary import (assemble_miscellaneous, load_dictionary,
                         normalize_atoms, read_matrix_file, read_vector_file,
                         save_dictionary)
from .domains import apply_transform, load_suite
from .oracle import lasso_cd
from .solver import FactorCache, SolverConfig, lasso_objective, solve_query
from .weighting import weighted_dictionary


def _add_solver_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, default=1.0,
                   help="L1 penalty (default 1.0)")
    p.add_argument("--l2", type=float, default=0.0,
                   help="Elastic-Net quadratic penalty (default 0, vanilla Lasso)")
    p.add_argument("--tau0", type=float, default=0.1)
    p.add_argument("--tau-growth", type=float, default=1.05)
    p.add_argument("--tau-cap", type=float, default=1e3)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--weighting", choices=("none", "softmax"), default="softmax")
    p.add_argument("--dual-update", choices=("scaled", "paper"), default="scaled",
                   help="dual step form; 'paper' uses the 1/tau-scaled variant")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip unit-normalizing dictionary atoms before solving")


def _solver_config(args):
    return SolverConfig(
        lam=args.lam, l2_penalty=args.l2, tau0=args.tau0,
        tau_growth=args.tau_growth, tau_cap=args.tau_cap,
        max_iter=args.max_iter, tol=args.tol,
        weighting_mode=args.weighting, dual_update=args.dual_update,
    )


def _load_dict(args):
    dic = load_dictionary(args.dict)
    if not args.no_normalize and not dic.normalized:
        dic = normalize_atoms(dic)
    return dic


def _cmd_transform(args):
    source = load_dictionary(args.source)
    if source.s != 1:
        print(f"error: transform needs a single-domain source, got s={source.s}",
              file=sys.stderr)
        return 2
    suite = load_suite(args.suite)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    transferred = []
    for t in suite:
        result = apply_transform(t, source)
        transferred.append(result)
        save_dictionary(result, out_dir / f"{t.label}.json")
    misc = assemble_miscellaneous(source, transferred)
    if args.normalize:
        misc = normalize_atoms(misc)
    save_dictionary(misc, out_dir / "miscellaneous.json")
    print(f"wrote {len(suite)} domain manifests and miscellaneous.json "
          f"(d={misc.d}, n={misc.n}, s={misc.s}) to {out_dir}")
    return 0


def _cmd_solve(args):
    dic = _load_dict(args)
    q = read_vector_file(args.query)
    cfg = _solver_config(args)
    result, weighting = solve_query(dic, q, cfg)
    payload = {
        "x": result.x.tolist(),
        "converged": result.converged,
        "iterations": result.iterations,
        "recovery_error": result.recovery_error,
        "wall_time_s": result.wall_time,
    }
    if weighting is not None:
        payload["weighting_blocks"] = weighting.blocks.tolist()
    if args.oracle:
        A_eff = dic.data if weighting is None else weighted_dictionary(dic, weighting)
        x_ref = lasso_cd(A_eff, q, cfg.lam, l2_penalty=cfg.l2_penalty)
        payload["oracle"] = {
            "objective": lasso_objective(A_eff, q, x_ref, cfg.lam, cfg.l2_penalty),
            "admm_objective": lasso_objective(A_eff, q, result.x, cfg.lam, cfg.l2_penalty),
        }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_classify(args):
    dic = _load_dict(args)
    queries = read_matrix_file(args.queries)
    if queries.ndim == 1:
        queries = queries[:, None]
    if queries.shape[0] != dic.d:
        print(f"error: queries have {queries.shape[0]} features, dictionary d={dic.d}",
              file=sys.stderr)
        return 2
    truth = None
    if args.truth:
        with open(args.truth) as fh:
            truth = json.load(fh)
        if len(truth) != queries.shape[1]:
            print("error: truth length does not match query count", file=sys.stderr)
            return 2
    cfg = _solver_config(args)
    cache = FactorCache(dic.data) if cfg.weighting_mode == "none" else None
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for i in range(queries.shape[1]):
            result, weighting = solve_query(dic, queries[:, i], cfg, cache=cache)
            decision = classify(result.x, weighting, dic.n, dic.s, cfg.weighting_mode)
            record = {
                "sample_id": i,
                "class_id": decision.class_id,
                "class_label": dic.class_labels[decision.class_id],
                "inferred_domain": decision.inferred_domain,
                "truth": None if truth is None else int(truth[i]),
                "top5": list(decision.ranking[:5]),
            }
            print(json.dumps(record), file=out)
    finally:
        if args.out:
            out.close()
    return 0


def _cmd_bench(args):
    exit_code = 0
    if args.compare_backends:
        rows = bench_mod.compare_backends()
        print(bench_mod.format_backend_rows(rows))
        print()
    if args.sweep:
        report = bench_mod.scaling_sweep(repeats=args.repeats)
        print(report.table())
        out_base = Path(args.out or "sweep")
        bench_mod.write_sweep_csv(report, out_base.with_suffix(".csv"))
        bench_mod.write_sweep_svg(report, out_base.with_suffix(".svg"))
        print(f"sweep written to {out_base.with_suffix('.csv')} "
              f"and {out_base.with_suffix('.svg')}")
        if not args.spec:
            return exit_code
    spec = bench_mod.load_spec(args.spec) if args.spec else bench_mod.default_experiment_spec()
    if args.out:
        spec.output_path = args.out
    report = bench_mod.run_experiment(spec)
    print(f"backend: {ACTIVE_BACKEND}")
    print(report.table())
    for res in report.assertion_results:
        status = "PASS" if res["passed"] else "FAIL"
        print(f"[{status}] {res['detail']}")
        if not res["passed"]:
            exit_code = 1
    if spec.output_path:
        print(f"report written to {spec.output_path}.json / .txt")
    return exit_code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mddl",
        description="Multi-domain dictionary classification via weighted Lasso/ADMM",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="apply a transform suite to a source dictionary")
    p.add_argument("--source", required=True, help="source dictionary manifest (s=1)")
    p.add_argument("--suite", required=True, help="transform suite JSON")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--normalize", action="store_true",
                   help="unit-normalize the assembled dictionary before saving")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("solve", help="solve one query, emit JSON")
    p.add_argument("--dict", required=True, help="dictionary manifest")
    p.add_argument("--query", required=True, help="query vector file (CSV or MDDL binary)")
    p.add_argument("--out", help="output JSON path (default stdout)")
    p.add_argument("--oracle", action="store_true",
                   help="also solve with the coordinate-descent reference and report objectives")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("classify", help="classify a batch of queries (JSON lines)")
    p.add_argument("--dict", required=True)
    p.add_argument("--queries", required=True, help="matrix file, one query per column")
    p.add_argument("--truth", help="JSON list of true class ids")
    p.add_argument("--out", help="output path (default stdout)")
    _add_solver_flags(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("bench", help="run an experiment spec / scaling sweep")
    p.add_argument("--spec", help="experiment spec JSON (default: built-in synthetic spec)")
    p.add_argument("--sweep", action="store_true", help="also run the runtime scaling sweep")
    p.add_argument("--repeats", type=int, default=20, help="queries per sweep point")
    p.add_argument("--compare-backends", action="store_true",
                   help="time the numba kernels against the numpy fallback")
    p.add_argument("--out", help="report output base path")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
