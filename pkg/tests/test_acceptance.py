"""Acceptance suite.

Each test covers one numbered criterion at its stated tolerance and time
budget and prints one PASS line (visible under ``pytest -s``).  Runs
executed here register their residual-identity reports so the identity
criterion sweeps every recorded run family.
"""

import time

import numpy as np
import pytest

from admmtune import fastadmm, l2reg, linalg, mpc, precond, qp
from admmtune.generators import (qp_all_active, qp_all_inactive, qp_instance,
                                 qp_known_gram_spectrum, random_l2, random_spd)
from admmtune.problems import L2Problem, QpProblem, QuadCost

_IDENTITY_REPORTS = []


def _run_checked(problem, rho, alpha=1.0, **kw):
    """Solve with recorded iterates and register the identity report."""
    sol = qp.solve(problem, rho, alpha=alpha, record_iterates=True, **kw)
    rep = qp.check_trace_identities(problem, rho, sol.trace, alpha=alpha)
    _IDENTITY_REPORTS.append((f"rho={rho:g} alpha={alpha:g} "
                              f"case={problem.rank_case}", rep))
    return sol


def _wide_family(seed, n=30, m=15, instances=8):
    rng = np.random.default_rng(seed)
    ratio = float(rng.uniform(10.0, 50.0))
    eigs = np.exp(rng.uniform(0.0, np.log(ratio), m))
    eigs[0], eigs[-1] = 1.0, ratio
    eigs /= np.sqrt(eigs[0] * eigs[-1])
    Q, A = qp_known_gram_spectrum(n, m, np.sort(eigs), rng)
    probs = [qp_instance(Q, A, rng) for _ in range(instances)]
    return probs, np.sort(eigs)


def test_c01_matched_step_flattens_spectrum():
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    for _ in range(20):
        n = int(rng.integers(2, 51))
        delta = float(np.exp(rng.uniform(-2, 2)))
        Q, _ = random_spd(n, float(np.exp(rng.uniform(-1, 0))),
                          float(np.exp(rng.uniform(0.5, 3))), rng)
        prob = L2Problem(QuadCost(Q, rng.standard_normal(n)), delta)
        E = l2reg.error_matrix(prob, delta)
        values = linalg.sym_eig(E).values
        assert np.all(np.abs(values - 0.5) <= 1e-10)
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    print(f"\nACCEPTANCE 01 PASS: matched-step error matrix has a flat 1/2 "
          f"spectrum on 20 instances ({elapsed:.2f}s)")


def test_c02_l2_tuning_optimal_and_measured():
    t0 = time.perf_counter()
    rng = np.random.default_rng(17)
    for inst in range(20):
        n = int(rng.integers(5, 30))
        lam_min = float(np.exp(rng.uniform(-1, 1)))
        lam_max = lam_min * float(np.exp(rng.uniform(1.0, 3.5)))
        regime = inst % 3
        if regime == 0:
            delta = lam_min * float(rng.uniform(0.15, 0.7))
        elif regime == 1:
            delta = lam_max * float(rng.uniform(1.5, 6.0))
        else:
            delta = float(rng.uniform(lam_min, lam_max))
        Q, lams = random_spd(n, lam_min, lam_max, rng)
        prob = L2Problem(QuadCost(Q, rng.standard_normal(n)), delta)
        report = l2reg.tune(lam_min, lam_max, delta)
        # analytic optimality against a 100-point log grid
        best = l2reg.worst_factor(report.rho_star, delta, lams)
        grid = np.exp(np.linspace(np.log(report.rho_star) - 3,
                                  np.log(report.rho_star) + 3, 100))
        assert all(best <= l2reg.worst_factor(r, delta, lams) + 1e-12
                   for r in grid)
        # measured tail contraction within 5 percent of the analytic factor
        g = rng.standard_normal(n)
        z0 = 1e12 * g / np.linalg.norm(g)
        trace = l2reg.solve(prob, report.rho_star,
                            init=(np.zeros(n), z0, delta * z0),
                            err_target=1e-11, max_iter=5000)
        measured = l2reg.empirical_factor(trace.dual_error, target=1e-9)
        assert abs(measured - report.zeta_star) <= 0.05 * report.zeta_star
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"ACCEPTANCE 02 PASS: analytic step beats a 100-point grid and "
          f"measured contraction is within 5% of the factor on 20 "
          f"three-regime instances ({elapsed:.2f}s)")


def test_c03_joint_tuning_one_step():
    t0 = time.perf_counter()
    rng = np.random.default_rng(23)
    for _ in range(20):
        n = int(rng.integers(2, 51))
        delta = float(np.exp(rng.uniform(-2, 2)))
        Q, _ = random_spd(n, float(np.exp(rng.uniform(-1, 0))),
                          float(np.exp(rng.uniform(0.5, 3))), rng)
        prob = L2Problem(QuadCost(Q, rng.standard_normal(n)), delta)
        E_R = l2reg.relaxed_error_matrix(prob, delta, 2.0)
        assert np.abs(linalg.sym_eig(E_R).values).max() <= 1e-10
        # dual-consistent start (the multiplier identity holds from step 1
        # onward in any run, so this is the state space of the iteration)
        z0 = rng.standard_normal(n)
        init = (np.zeros(n), z0, delta * z0)
        trace = l2reg.solve(prob, delta, alpha=2.0, init=init)
        scale = 1.0 + np.linalg.norm(trace.z)
        assert trace.dual_error[1] <= 1e-8 * scale
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    print(f"ACCEPTANCE 03 PASS: relaxed matched pair zeroes the error map "
          f"and converges in one step on 20 instances ({elapsed:.2f}s)")


def test_c04_per_step_contraction_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    for run in range(20):
        n, m = 18, 9
        ratio = float(rng.uniform(4.0, 40.0))
        eigs = np.exp(rng.uniform(0.0, np.log(ratio), m))
        eigs[0], eigs[-1] = 1.0, ratio
        eigs /= np.sqrt(ratio)
        Q, A = qp_known_gram_spectrum(n, m, np.sort(eigs), rng)
        prob = qp_instance(Q, A, rng)
        rho = float(np.exp(rng.uniform(-1.5, 1.5)))
        bound = qp.contraction_bound(prob, rho)
        assert bound < 1.0
        if run < 5:
            sol = _run_checked(prob, rho, tol=1e-5)
        else:
            sol = qp.solve(prob, rho, tol=1e-5)
        fv = sol.trace.fv_norm
        keep = fv[:-1] > 1e-13
        ratios = fv[1:][keep] / fv[:-1][keep]
        assert np.all(ratios <= bound + 1e-6)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"ACCEPTANCE 04 PASS: full-row-rank per-step contraction stayed "
          f"within the matrix-norm bound on 20 runs ({elapsed:.2f}s)")


def test_c05_qp_tuning_tail_and_grid():
    t0 = time.perf_counter()
    for fam_seed in (11, 12, 13):
        probs, eigs = _wide_family(fam_seed)
        spec = qp.spectral(probs[0])
        np.testing.assert_allclose(
            [spec.lam_min_nonzero, spec.lam_max], [eigs[0], eigs[-1]],
            rtol=1e-8)
        tuning = qp.tune(spec)
        at_star = []
        for i, prob in enumerate(probs):
            if i == 0:
                sol = _run_checked(prob, tuning.rho_star, tol=1e-5)
            else:
                sol = qp.solve(prob, tuning.rho_star, tol=1e-5)
            assert sol.converged
            at_star.append(sol.iterations)
            tail = l2reg.empirical_factor(sol.trace.fv_norm, target=0.0,
                                          window=30, floor=1e-12)
            assert tail <= tuning.zeta_star + 0.02
        grid = np.exp(np.linspace(np.log(tuning.rho_star / 100),
                                  np.log(tuning.rho_star * 100), 50))
        mean_star = float(np.mean(at_star))
        for rho in grid:
            counts = [qp.solve(p, rho, tol=1e-5, max_iter=20_000).iterations
                      for p in probs]
            assert np.mean(counts) >= 0.9 * mean_star
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    print(f"ACCEPTANCE 05 PASS: tail contraction within 0.02 of the factor "
          f"and no grid step beats the analytic one by 10% on 3 prescribed-"
          f"spectrum families ({elapsed:.2f}s)")


def _printed_slow_instance():
    Q = np.array([[40.513, 0.069], [0.069, 40.389]])
    A = np.array([[-1.0, 0.0], [0.0, -1.0], [0.1151, 0.9934]])
    b = np.array([6.0, 6.0, -0.3422])
    return QpProblem(QuadCost(Q, np.zeros(2)), A, b)


def test_c06_printed_instance_slow_regime():
    t0 = time.perf_counter()
    prob = _printed_slow_instance()
    tuning = qp.tune(qp.spectral(prob))
    assert abs(tuning.rho_star - 28.6) <= 0.05
    # default start: monotone auxiliary residual
    sol = _run_checked(prob, 28.6, tol=1e-12)
    fv = sol.trace.fv_norm
    assert np.all(fv[1:] <= fv[:-1] * (1 + 1e-9))
    # the slow regime needs the dual loaded along the transposed nullspace
    # (the alignment hypothesis of the lower-bound analysis); the bound
    # then climbs above 0.9 for a stretch of steps
    null_dir = np.array([0.1151, 0.9934, 1.0])
    null_dir /= np.linalg.norm(null_dir)
    slow = _run_checked(prob, 28.6, tol=1e-12,
                        init=(np.zeros(2), np.zeros(3), 100.0 * null_dir))
    fv2 = slow.trace.fv_norm
    assert np.all(fv2[1:] <= fv2[:-1] * (1 + 1e-9))
    zlb = slow.trace.zeta_lb
    zlb = zlb[~np.isnan(zlb)]
    assert np.max(zlb) >= 0.9
    assert np.all(zlb <= 1.0 + 1e-9)
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(f"ACCEPTANCE 06 PASS: printed instance tunes to 28.6, stays "
          f"monotone, and exhibits a lower bound of "
          f"{np.max(zlb):.3f} >= 0.9 ({elapsed:.2f}s)")


def test_c07_residual_identities_across_runs():
    t0 = time.perf_counter()
    # dedicated fresh runs covering each rank case
    rng = np.random.default_rng(41)
    wide = qp_instance(*qp_known_gram_spectrum(
        10, 5, np.exp(np.linspace(-0.6, 0.8, 5)), rng), rng)
    _run_checked(wide, 0.8, tol=1e-8)
    _run_checked(wide, 0.8, alpha=2.0, tol=1e-8)
    _run_checked(_printed_slow_instance(), 28.6, tol=1e-9)  # tall case
    n = 4
    Asq = rng.standard_normal((n, n))
    Qsq, _ = random_spd(n, 1.0, 6.0, rng)
    square = QpProblem(QuadCost(Qsq, rng.standard_normal(n)), Asq,
                       rng.standard_normal(n))
    _run_checked(square, 1.0, tol=1e-8)
    assert len(_IDENTITY_REPORTS) >= 4
    for label, rep in _IDENTITY_REPORTS:
        assert rep.eq_minus <= 1e-8 and rep.eq_plus <= 1e-8, (label, rep)
        assert rep.bound_r <= 1e-8 and rep.bound_s <= 1e-8, (label, rep)
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"ACCEPTANCE 07 PASS: residual split identities and norm bounds "
          f"held at every step of {len(_IDENTITY_REPORTS)} recorded runs "
          f"({elapsed:.2f}s)")


def test_c08_optimal_scaling_against_grid_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    for inst in range(10):
        m = 2 if inst % 2 == 0 else 3
        n = max(int(rng.integers(2, 5)), m)
        Q, _ = random_spd(n, 1.0, float(rng.uniform(2, 30)), rng)
        A = rng.standard_normal((m, n)) * np.exp(rng.uniform(-1.5, 1.5,
                                                             (m, 1)))
        res = precond.optimal_scaling(Q, A)
        assert res.ratio_after <= res.ratio_before + 1e-8
        grid = np.exp(np.linspace(np.log(1e-3), np.log(1e3), 121))
        if m == 2:
            oracle = min(precond.nonzero_eig_ratio(Q, A, np.array([1.0, s]))
                         for s in grid)
        else:
            oracle = min(precond.nonzero_eig_ratio(Q, A,
                                                   np.array([1.0, s, t]))
                         for s in grid[::2] for t in grid[::2])
        assert res.ratio_after <= oracle * 1.02
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    print(f"ACCEPTANCE 08 PASS: scaling search within 2% of the dense grid "
          f"oracle on 10 instances, never worse than unscaled "
          f"({elapsed:.2f}s)")


def test_c09_mpc_batch_tuned_relaxed_vs_accelerated():
    t0 = time.perf_counter()
    nx, nu = 4, 2
    H, J, J_r = mpc.random_plant(nx, nu, 1, seed=42)
    # input-cap template: the condensed constraint matrix is square and
    # invertible, the setting where the joint (step, relaxation) tuning is
    # exact (with rank-deficient constraint blocks, relaxation exactly 2
    # leaves undamped modes and is not usable as-is)
    template = mpc.MpcProblem(H, J, J_r, np.eye(nx), np.eye(nx),
                              0.1 * np.eye(nu), 5, -1e6, 1e6, -2.0, 2.0,
                              np.zeros(nx), np.full(nx, 12.0), np.zeros(nu),
                              np.ones(1))
    states = mpc.grid_initial_states([10.0, 11.25, 12.5, 13.75, 15.0], nx)
    batch = mpc.generate_batch(template, states, max_feasible=60,
                               state_upper=False, state_lower=False,
                               input_lower=False)
    feasible = batch.feasible_entries
    assert len(feasible) >= 50
    first = batch.problem(feasible[0])
    assert first.n == 10
    relaxed = qp.tune_relaxed(qp.spectral(first))
    assert relaxed.alpha_star == 2.0
    wins = 0
    for i, entry in enumerate(feasible):
        prob = batch.problem(entry)
        if i < 3:
            tuned = _run_checked(prob, relaxed.rho_star, alpha=2.0, tol=1e-5)
        else:
            tuned = qp.solve(prob, relaxed.rho_star, alpha=2.0, tol=1e-5)
        fast = fastadmm.solve_fast(prob, 1.0, tol=1e-5, max_iter=20_000)
        assert tuned.converged
        wins += tuned.iterations <= fast.iterations
    share = wins / len(feasible)
    assert share >= 0.9
    elapsed = time.perf_counter() - t0
    assert elapsed < 300.0
    print(f"ACCEPTANCE 09 PASS: tuned relaxed solver needed no more "
          f"iterations than the accelerated baseline on "
          f"{share:.0%} of {len(feasible)} feasible condensed instances "
          f"({elapsed:.2f}s)")


def test_c10_crossover_against_momentum_baseline():
    t0 = time.perf_counter()
    lam_min, lam_max = 1.0, 1.2e3
    Q, lams = random_spd(40, lam_min, lam_max, seed=77)
    # two-path spectrum check, then the closed-form curves
    dec = linalg.sym_eig(Q)
    np.testing.assert_allclose([dec.values[0], dec.values[-1]],
                               [lam_min, lam_max], rtol=1e-9)
    deltas = np.exp(np.linspace(np.log(1e-3), np.log(1e5), 30))
    split = [l2reg.tune(lam_min, lam_max, d).zeta_star for d in deltas]
    momentum = [l2reg.heavy_ball_factor(lam_min, lam_max, d) for d in deltas]
    assert split[0] < momentum[0]
    assert split[-1] > momentum[-1]
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    print(f"ACCEPTANCE 10 PASS: tuned splitting factor crosses the momentum "
          f"baseline across the penalty sweep (condition number 1.2e3) "
          f"({elapsed:.2f}s)")


def test_c11_extreme_activity_prefers_extreme_steps():
    t0 = time.perf_counter()
    inactive = qp_all_inactive(6, seed=15)
    rho_star = qp.tune(qp.spectral(inactive)).rho_star
    rho_small, alpha = qp.extreme_case_advisor("all-inactive", rho_star)
    assert alpha == 1.0
    k_star = _run_checked(inactive, rho_star).iterations
    k_small = _run_checked(inactive, rho_small).iterations
    assert k_small < k_star
    active = qp_all_active(6, seed=16)
    rho_star2 = qp.tune(qp.spectral(active)).rho_star
    rho_big, _ = qp.extreme_case_advisor("all-active", rho_star2)
    k_star2 = _run_checked(active, rho_star2).iterations
    k_big = _run_checked(active, rho_big).iterations
    assert k_big < k_star2
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0
    print(f"ACCEPTANCE 11 PASS: vanishing step wins on the inactive box "
          f"({k_small} vs {k_star}), huge step wins on the active box "
          f"({k_big} vs {k_star2}) ({elapsed:.2f}s)")
