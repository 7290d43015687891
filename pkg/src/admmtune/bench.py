"""Experiment harness: step-size sweeps and method comparisons.

Runs are seeded and deterministic; CSV and JSON outputs embed the seed in
a header line, and the wall-time column is the only nondeterministic
field (it is written last so byte-level comparisons can strip it).
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from . import fastadmm, generators, l2reg, mpc, precond, qp
from .problems import load_l2, load_qp

QP_METHODS = ("admm", "admm-relaxed", "fast-admm", "fast-admm-tuned")
L2_METHODS = ("admm", "admm-relaxed", "gradient", "heavy-ball")


@dataclass
class ExperimentConfig:
    """Declarative description of one sweep or comparison.

    ``kind`` selects the problem family ('qp', 'l2', 'l2-factors', or
    'mpc').  ``source`` names either matrix-text files or a generator
    spec; ``rho_grid`` is 'auto' (analytic tuning), a {lo, hi, points}
    log grid spec, or an explicit list.
    """

    kind: str
    source: dict
    methods: tuple = ("admm",)
    rho_grid: object = "auto"
    alpha: float = 2.0
    scaling: str = "none"
    tol: float = 1e-5
    max_iter: int = 100_000
    seed: int = 0
    delta_grid: object = None

    def __post_init__(self):
        if self.kind not in ("qp", "l2", "l2-factors", "mpc"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        allowed = QP_METHODS if self.kind in ("qp", "mpc") else L2_METHODS
        for m in self.methods:
            if self.kind != "l2-factors" and m not in allowed:
                raise ValueError(f"method {m!r} not valid for kind {self.kind!r}")
        if self.scaling not in ("none", "optimal"):
            raise ValueError("scaling must be 'none' or 'optimal'")

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            data = json.load(fh)
        data["methods"] = tuple(data.get("methods", ("admm",)))
        return cls(**data)

    def to_dict(self):
        out = dict(kind=self.kind, source=self.source,
                   methods=list(self.methods), rho_grid=self.rho_grid,
                   alpha=self.alpha, scaling=self.scaling, tol=self.tol,
                   max_iter=self.max_iter, seed=self.seed)
        if self.delta_grid is not None:
            out["delta_grid"] = self.delta_grid
        return out


@dataclass
class RunRecord:
    instance: int
    method: str
    rho: float
    alpha: float
    scaling: str
    iterations: int
    converged: bool
    final_r: float
    final_s: float
    empirical_factor: float
    wall_time: float

    CSV_HEADER = ("row_type,instance,method,rho,alpha,scaling,iterations,"
                  "converged,final_r,final_s,empirical_factor,wall_time")

    def csv_row(self):
        return (f"run,{self.instance},{self.method},{self.rho!r},"
                f"{self.alpha!r},{self.scaling},{self.iterations},"
                f"{int(self.converged)},{self.final_r!r},{self.final_s!r},"
                f"{self.empirical_factor!r},{self.wall_time!r}")


# ---------------------------------------------------------------------------
# problem sources

def _qp_instances(config):
    src = config.source
    if "files" in src:
        f = src["files"]
        return [load_qp(f["Q"], f["q"], f["A"], f["c"])]
    if "manifest" in src:
        batch = mpc.read_manifest(src["manifest"])
        return [batch.problem(e) for e in batch.feasible_entries]
    gen = src["generator"]
    n, m = gen.get("n", 20), gen.get("m", 10)
    count = gen.get("instances", 1)
    eigs = np.exp(np.linspace(np.log(gen.get("gram_lo", 0.5)),
                              np.log(gen.get("gram_hi", 8.0)), m))
    Q, A = generators.qp_known_gram_spectrum(n, m, eigs, config.seed)
    return [generators.qp_instance(Q, A, config.seed + 1 + i)
            for i in range(count)]


def _l2_instances(config):
    src = config.source
    if "files" in src:
        f = src["files"]
        return [load_l2(f["Q"], f["q"], f["delta"])]
    gen = src["generator"]
    count = gen.get("instances", 1)
    out = []
    for i in range(count):
        prob, _ = generators.random_l2(gen.get("n", 20), gen.get("delta", 1.0),
                                       gen.get("lam_min", 1.0),
                                       gen.get("lam_max", 10.0),
                                       config.seed + i)
        out.append(prob)
    return out


def _mpc_batch(config):
    gen = config.source["generator"]
    nx, nu = gen.get("nx", 4), gen.get("nu", 2)
    H, J, J_r = mpc.random_plant(nx, nu, gen.get("nr", 1), config.seed)
    template = mpc.MpcProblem(
        H, J, J_r, np.eye(nx), np.eye(nx), gen.get("r_weight", 0.1) * np.eye(nu),
        gen.get("horizon", 5), gen.get("x_min", -100.0), gen.get("x_max", 100.0),
        gen.get("u_min", -1.0), gen.get("u_max", 1.0), np.zeros(nx),
        np.full(nx, gen.get("x_ref", 12.0)), np.zeros(nu), np.ones(1))
    states = mpc.grid_initial_states(gen.get("grid", [10, 11.25, 12.5, 13.75, 15]), nx)
    toggles = {k: gen.get(k, True) for k in
               ("state_upper", "state_lower", "input_upper", "input_lower")}
    return mpc.generate_batch(template, states,
                              max_feasible=gen.get("max_feasible"),
                              probe_max_iter=gen.get("probe_max_iter", 5000),
                              **toggles)


# ---------------------------------------------------------------------------
# single runs

def _run_qp_method(problem, method, rho_star, rho, config, scaling_vec):
    t0 = time.perf_counter()
    if method == "admm":
        sol = qp.solve(problem, rho, alpha=1.0, scaling=scaling_vec,
                       tol=config.tol, max_iter=config.max_iter)
    elif method == "admm-relaxed":
        sol = qp.solve(problem, rho, alpha=config.alpha, scaling=scaling_vec,
                       tol=config.tol, max_iter=config.max_iter)
    elif method == "fast-admm":
        sol = fastadmm.solve_fast(problem, 1.0, scaling=scaling_vec,
                                  tol=config.tol, max_iter=config.max_iter)
    elif method == "fast-admm-tuned":
        sol = fastadmm.solve_fast(problem, rho_star, scaling=scaling_vec,
                                  tol=config.tol, max_iter=config.max_iter)
    else:
        raise ValueError(method)
    wall = time.perf_counter() - t0
    used_rho = 1.0 if method == "fast-admm" else \
        (rho_star if method == "fast-admm-tuned" else rho)
    factor = l2reg.empirical_factor(sol.trace.fv_norm, target=0.0,
                                    window=30, floor=1e-12)
    return RunRecord(instance=-1, method=method, rho=used_rho,
                     alpha=config.alpha if method == "admm-relaxed" else 1.0,
                     scaling=config.scaling, iterations=sol.iterations,
                     converged=sol.converged,
                     final_r=float(sol.trace.r_norm[-1]),
                     final_s=float(sol.trace.s_norm[-1]),
                     empirical_factor=factor, wall_time=wall)


def _run_l2_method(problem, method, rho, config):
    t0 = time.perf_counter()
    if method in ("admm", "admm-relaxed"):
        alpha = 1.0 if method == "admm" else config.alpha
        trace = l2reg.solve(problem, rho, alpha=alpha, err_target=config.tol,
                            max_iter=config.max_iter)
        errors = trace.dual_error
        converged, iters = trace.converged, trace.iterations
    elif method == "gradient":
        trace = l2reg.baseline_gradient(problem, err_target=config.tol,
                                        max_iter=config.max_iter)
        errors, converged, iters = trace.x_error, trace.converged, trace.iterations
    elif method == "heavy-ball":
        trace = l2reg.baseline_heavy_ball(problem, err_target=config.tol,
                                          max_iter=config.max_iter)
        errors, converged, iters = trace.x_error, trace.converged, trace.iterations
    else:
        raise ValueError(method)
    wall = time.perf_counter() - t0
    factor = l2reg.empirical_factor(errors, target=config.tol)
    final = float(errors[-1])
    return RunRecord(instance=-1, method=method, rho=rho,
                     alpha=config.alpha if method == "admm-relaxed" else 1.0,
                     scaling="none", iterations=iters, converged=converged,
                     final_r=final, final_s=final, empirical_factor=factor,
                     wall_time=wall)


def _rho_values(config, rho_star):
    grid = config.rho_grid
    if grid == "auto":
        return [rho_star]
    if isinstance(grid, dict):
        return list(np.exp(np.linspace(np.log(grid["lo"]), np.log(grid["hi"]),
                                       int(grid["points"]))))
    return [float(g) for g in grid]


# ---------------------------------------------------------------------------
# sweeps and comparisons

def run_sweep(config):
    """One record per (instance, method, rho) plus min/mean/max aggregates.

    For the 'l2-factors' kind the sweep is over the penalty weight and the
    records are closed-form convergence factors instead of runs.
    """
    if config.kind == "l2-factors":
        return _factor_sweep(config)
    records = []
    if config.kind in ("qp", "mpc"):
        if config.kind == "qp":
            problems = _qp_instances(config)
        else:
            batch = _mpc_batch(config)
            problems = [batch.problem(e) for e in batch.feasible_entries]
        if not problems:
            raise ValueError("no (feasible) instances to run")
        scaling_vec = None
        if config.scaling == "optimal":
            res = precond.optimal_scaling(problems[0].Q, problems[0].A)
            scaling_vec = res.L
        spec = qp.spectral(problems[0], scaling=scaling_vec)
        rho_star = qp.tune(spec).rho_star
        for rho in _rho_values(config, rho_star):
            for i, prob in enumerate(problems):
                for method in config.methods:
                    rec = _run_qp_method(prob, method, rho_star, rho, config,
                                         scaling_vec)
                    rec.instance = i
                    records.append(rec)
    else:
        problems = _l2_instances(config)
        for i, prob in enumerate(problems):
            report = l2reg.tune_problem(prob)
            for rho in _rho_values(config, report.rho_star):
                for method in config.methods:
                    rec = _run_l2_method(prob, method, rho, config)
                    rec.instance = i
                    records.append(rec)
    return records, aggregate(records)


def aggregate(records):
    """Min/mean/max iteration counts per (method, rho) across instances."""
    keys = sorted({(r.method, r.rho) for r in records})
    out = []
    for method, rho in keys:
        counts = np.array([r.iterations for r in records
                           if r.method == method and r.rho == rho])
        out.append({"method": method, "rho": rho,
                    "min": int(counts.min()), "mean": float(counts.mean()),
                    "max": int(counts.max())})
    return out


def _factor_sweep(config):
    """Closed-form factor curves over a penalty-weight grid."""
    gen = config.source["generator"]
    lam_min, lam_max = gen.get("lam_min", 1.0), gen.get("lam_max", 1200.0)
    grid = config.delta_grid or {"lo": 1e-3, "hi": 1e5, "points": 40}
    deltas = np.exp(np.linspace(np.log(grid["lo"]), np.log(grid["hi"]),
                                int(grid["points"])))
    rows = []
    for d in deltas:
        report = l2reg.tune(lam_min, lam_max, d)
        rows.append({
            "delta": float(d),
            "admm_rho_eq_delta": l2reg.worst_factor(d, d, [lam_min, lam_max]),
            "admm_rho_star": report.zeta_star,
            "gradient": float(l2reg.gradient_factor(lam_min, lam_max, d)),
            "heavy_ball": float(l2reg.heavy_ball_factor(lam_min, lam_max, d)),
        })
    return rows, []


def write_sweep_csv(path, config, records, aggregates):
    with open(path, "w") as fh:
        fh.write(f"# seed={config.seed}\n")
        fh.write(f"# config={json.dumps(config.to_dict(), sort_keys=True)}\n")
        if config.kind == "l2-factors":
            fh.write("delta,admm_rho_eq_delta,admm_rho_star,gradient,heavy_ball\n")
            for row in records:
                fh.write(",".join(repr(row[k]) for k in
                                  ("delta", "admm_rho_eq_delta",
                                   "admm_rho_star", "gradient",
                                   "heavy_ball")) + "\n")
            return path
        fh.write(RunRecord.CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.csv_row() + "\n")
        for agg in aggregates:
            for stat in ("min", "mean", "max"):
                fh.write(f"agg_{stat},,{agg['method']},{agg['rho']!r},,,"
                         f"{agg[stat]!r},,,,,\n")
    return path


def compare_methods(config):
    """Per-method iteration statistics and pairwise win counts.

    A method wins a pairwise comparison on an instance when it needs
    strictly fewer iterations; ties count toward ``ties``.
    """
    if len(config.methods) < 2:
        raise ValueError("need at least two methods to compare")
    records, _ = run_sweep(config)
    by_method = {m: {} for m in config.methods}
    for rec in records:
        by_method[rec.method][rec.instance] = rec
    instances = sorted(set.intersection(
        *[set(v.keys()) for v in by_method.values()]))
    summary = {"seed": config.seed, "instances": len(instances),
               "methods": {}, "pairwise": {}}
    for m in config.methods:
        counts = np.array([by_method[m][i].iterations for i in instances])
        summary["methods"][m] = {
            "mean_iterations": float(counts.mean()),
            "median_iterations": float(np.median(counts)),
            "max_iterations": int(counts.max()),
            "converged": int(sum(by_method[m][i].converged for i in instances)),
        }
    for a in config.methods:
        for b in config.methods:
            if a >= b:
                continue
            wins_a = sum(by_method[a][i].iterations < by_method[b][i].iterations
                         for i in instances)
            wins_b = sum(by_method[b][i].iterations < by_method[a][i].iterations
                         for i in instances)
            summary["pairwise"][f"{a} vs {b}"] = {
                a: int(wins_a), b: int(wins_b),
                "ties": len(instances) - wins_a - wins_b}
    return summary
