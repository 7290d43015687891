"""Command-line harness.

Subcommands: ``tune`` (tuning report as JSON), ``solve`` (single run plus
trace CSV), ``sweep`` and ``compare`` (config-driven experiments),
``scale`` (optimal constraint scaling as JSON), ``condense`` (write a
condensed batch to disk).  The output directory may be overridden with
the ``ADMMTUNE_OUTDIR`` environment variable.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench, fastadmm, l2reg, matio, mpc, precond, qp
from .problems import load_l2, load_qp


def _outdir(args):
    out = os.environ.get("ADMMTUNE_OUTDIR", getattr(args, "out", None) or ".")
    os.makedirs(out, exist_ok=True)
    return out


def _add_qp_files(p):
    p.add_argument("--quad", required=True, help="matrix file for the quadratic term")
    p.add_argument("--lin", required=True, help="vector file for the linear term")
    p.add_argument("--constraints", help="constraint matrix file (QP kind)")
    p.add_argument("--limits", help="constraint offset vector file (QP kind)")
    p.add_argument("--delta", help="scalar file with the penalty weight (l2 kind)")


def _load_problem(args):
    if args.kind == "qp":
        if not (args.constraints and args.limits):
            raise SystemExit("qp kind needs --constraints and --limits")
        return load_qp(args.quad, args.lin, args.constraints, args.limits)
    if not args.delta:
        raise SystemExit("l2 kind needs --delta")
    return load_l2(args.quad, args.lin, args.delta)


def cmd_tune(args):
    problem = _load_problem(args)
    if args.kind == "qp":
        scaling = None
        if args.scaling == "optimal":
            scaling = precond.optimal_scaling(problem.Q, problem.A).L
        spec = qp.spectral(problem, scaling=scaling)
        out = {"kind": "qp", "standard": qp.tune(spec).to_dict(),
               "relaxed": qp.tune_relaxed(spec).to_dict(),
               "lam_min_nonzero": spec.lam_min_nonzero,
               "lam_max": spec.lam_max, "nullity": spec.nullity,
               "rank_case": spec.rank_case}
    else:
        report = l2reg.tune_problem(problem)
        out = {"kind": "l2", **report.to_dict()}
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_solve(args):
    problem = _load_problem(args)
    outdir = _outdir(args)
    trace_path = os.path.join(outdir, args.trace)
    if args.kind == "qp":
        scaling = None
        if args.scaling == "optimal":
            scaling = precond.optimal_scaling(problem.Q, problem.A).L
        spec = qp.spectral(problem, scaling=scaling)
        rho = qp.tune(spec).rho_star if args.rho == "auto" else float(args.rho)
        if args.method == "fast-admm":
            sol = fastadmm.solve_fast(problem, rho, scaling=scaling,
                                      tol=args.tol, max_iter=args.max_iter)
        else:
            sol = qp.solve(problem, rho, alpha=args.alpha, scaling=scaling,
                           tol=args.tol, max_iter=args.max_iter)
        sol.trace.write_csv(trace_path, seed=args.seed)
        out = {"kind": "qp", "method": args.method, "rho": rho,
               "alpha": args.alpha, "status": sol.status,
               "iterations": sol.iterations, "x": sol.x.tolist(),
               "trace": trace_path}
    else:
        if args.method == "fast-admm":
            raise SystemExit("fast-admm applies to the qp kind only")
        report = l2reg.tune_problem(problem)
        rho = report.rho_star if args.rho == "auto" else float(args.rho)
        trace = l2reg.solve(problem, rho, alpha=args.alpha,
                            err_target=args.tol, max_iter=args.max_iter)
        trace.write_csv(trace_path, seed=args.seed)
        out = {"kind": "l2", "rho": rho, "alpha": args.alpha,
               "status": trace.status, "iterations": trace.iterations,
               "x": trace.x.tolist(), "trace": trace_path}
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_sweep(args):
    config = bench.ExperimentConfig.from_json(args.config)
    outdir = _outdir(args)
    records, aggregates = bench.run_sweep(config)
    path = os.path.join(outdir, args.name)
    bench.write_sweep_csv(path, config, records, aggregates)
    print(path)


def cmd_compare(args):
    config = bench.ExperimentConfig.from_json(args.config)
    summary = bench.compare_methods(config)
    if args.out:
        outdir = _outdir(args)
        path = os.path.join(outdir, "compare.json")
        with open(path, "w") as fh:
            json.dump(summary, fh, indent=2)
        print(path)
    else:
        json.dump(summary, sys.stdout, indent=2)
        sys.stdout.write("\n")


def cmd_scale(args):
    Q = matio.read_matrix(args.quad)
    A = matio.read_matrix(args.constraints)
    result = precond.optimal_scaling(Q, A)
    json.dump(result.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_condense(args):
    with open(args.config) as fh:
        spec = json.load(fh)
    nx, nu, nr = spec.get("nx", 4), spec.get("nu", 2), spec.get("nr", 1)
    seed = spec.get("seed", 0)
    H, J, J_r = mpc.random_plant(nx, nu, nr, seed)
    template = mpc.MpcProblem(
        H, J, J_r, np.eye(nx), np.eye(nx),
        spec.get("r_weight", 0.1) * np.eye(nu), spec.get("horizon", 5),
        spec.get("x_min", -100.0), spec.get("x_max", 100.0),
        spec.get("u_min", -1.0), spec.get("u_max", 1.0), np.zeros(nx),
        np.full(nx, spec.get("x_ref", 0.0)), np.zeros(nu), np.ones(nr))
    states = mpc.grid_initial_states(spec.get("grid", [0.0]), nx)
    toggles = {k: spec.get(k, True) for k in
               ("state_upper", "state_lower", "input_upper", "input_lower")}
    batch = mpc.generate_batch(template, states,
                               probe=spec.get("probe", True),
                               max_feasible=spec.get("max_feasible"),
                               normalize=spec.get("normalize", True),
                               **toggles)
    path = mpc.write_manifest(batch, _outdir(args))
    feasible = len(batch.feasible_entries)
    print(json.dumps({"manifest": path, "instances": len(batch.entries),
                      "feasible": feasible, "seed": seed}))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="admmtune",
        description="Tuned operator-splitting solvers for quadratic programs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tune", help="print the tuning report as JSON")
    p.add_argument("--kind", choices=("qp", "l2"), required=True)
    _add_qp_files(p)
    p.add_argument("--scaling", choices=("none", "optimal"), default="none")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("solve", help="single run, trace written as CSV")
    p.add_argument("--kind", choices=("qp", "l2"), required=True)
    _add_qp_files(p)
    p.add_argument("--method", choices=("admm", "fast-admm"), default="admm")
    p.add_argument("--rho", default="auto")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--scaling", choices=("none", "optimal"), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--out", default=None, help="output directory")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run a config-driven sweep to CSV")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--name", default="sweep.csv")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="method comparison summary JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("scale", help="optimal constraint row scaling")
    p.add_argument("--quad", required=True)
    p.add_argument("--constraints", required=True)
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("condense", help="condense an MPC batch to disk")
    p.add_argument("--config", required=True, help="plant/batch spec JSON")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_condense)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
