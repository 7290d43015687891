"""Splitting solver for inequality-constrained QPs.

Implements the standard and relaxed iterations on the slack reformulation,
the sign/indicator bookkeeping, primal/dual/auxiliary residual tracking
with the slow-convergence lower-bound diagnostics, closed-form optimal
step sizes (exact for full-row-rank or invertible constraint matrices,
the smallest-nonzero-eigenvalue heuristic otherwise), and the residual
identity checks tying the auxiliary residual to the primal/dual pair.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels, linalg
from .problems import QpProblem

DEFAULT_TOL = 1e-5
DEFAULT_MAX_ITER = 100_000
DEFAULT_GUARD = 1e12

#: fv-difference norms at or below this are treated as a zero denominator
#: in the lower-bound diagnostics (marked undefined).
DIAG_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# spectra and tuning

@dataclass(frozen=True)
class QpSpectral:
    """Extreme nonzero eigenvalues of the constraint-preconditioned Gram
    matrix A Q^{-1} A', with its rank bookkeeping."""

    lam_min_nonzero: float
    lam_max: float
    nullity: int
    rank_case: str

    @property
    def heuristic(self):
        """True when zero eigenvalues were skipped (tuning is heuristic)."""
        return self.nullity > 0


def spectral(problem, scaling=None):
    """Compute :class:`QpSpectral` for a problem, optionally row-scaled.

    ``nullity`` counts the zero eigenvalues of the Gram matrix, i.e. the
    dimension of the nullspace of the transposed (scaled) constraint
    matrix; it is positive exactly when the constraint matrix is tall.
    """
    A = _apply_scaling(problem.A, scaling)
    G = A @ np.linalg.solve(problem.Q, A.T)
    values = linalg.sym_eig((G + G.T) / 2).values
    rank = linalg.numeric_rank(values)
    if rank == 0:
        raise ValueError("A Q^{-1} A' is numerically zero")
    nonzero = values[values > linalg.RANK_TOL * values.max()]
    return QpSpectral(lam_min_nonzero=float(nonzero.min()),
                      lam_max=float(values.max()),
                      nullity=int(values.shape[0] - rank),
                      rank_case=problem.rank_case)


@dataclass(frozen=True)
class QpTuning:
    rho_star: float
    zeta_star: float
    heuristic: bool

    def to_dict(self):
        return {"rho_star": self.rho_star, "zeta_star": self.zeta_star,
                "heuristic": self.heuristic}


@dataclass(frozen=True)
class RelaxedQpTuning:
    rho_star: float
    alpha_star: float
    zeta_star: float
    heuristic: bool

    def to_dict(self):
        return {"rho_star": self.rho_star, "alpha_star": self.alpha_star,
                "zeta_star": self.zeta_star, "heuristic": self.heuristic}


def tune(spec):
    """Step size minimizing the worst-case auxiliary-residual factor.

    Exact when the constraint matrix has full row rank or is invertible;
    otherwise the smallest nonzero eigenvalue stands in for the smallest
    one and the result is flagged as a heuristic.
    """
    lo, hi = spec.lam_min_nonzero, spec.lam_max
    rho = 1.0 / np.sqrt(lo * hi)
    zeta = hi / (hi + np.sqrt(lo * hi))
    return QpTuning(float(rho), float(zeta), spec.heuristic)


def tune_relaxed(spec):
    """Jointly optimal (step size, relaxation) pair; relaxation is 2.

    The factor is strictly below the unrelaxed optimum.  Note the pair is
    optimal for full-row-rank or invertible constraint matrices; with a
    rank-deficient Gram matrix, relaxation exactly 2 leaves undamped
    residual modes and the solver may cycle (use values below 2 there).
    """
    lo, hi = spec.lam_min_nonzero, spec.lam_max
    root = np.sqrt(lo * hi)
    return RelaxedQpTuning(float(1.0 / root), 2.0,
                           float((hi - root) / (hi + root)), spec.heuristic)


def theoretical_factor(rho, alpha, spec):
    """Worst-case per-step factor over the nonzero eigenvalues.

    At ``alpha == 1`` this is the standard bound and also the quantity the
    slow-convergence lower bound is compared against.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    lams = np.array([spec.lam_min_nonzero, spec.lam_max])
    shift = rho * lams / (1.0 + rho * lams)
    return float(np.max(alpha * np.abs(shift - 0.5) + 1.0 - alpha / 2.0))


def piecewise_factor(rho, spec):
    """Two-branch closed form of the unrelaxed worst-case factor."""
    rho_star = 1.0 / np.sqrt(spec.lam_min_nonzero * spec.lam_max)
    if rho <= rho_star:
        return float(1.0 / (1.0 + rho * spec.lam_min_nonzero))
    return float(rho * spec.lam_max / (1.0 + rho * spec.lam_max))


def extreme_case_advisor(activity, rho_star, shrink=1e-4, grow=1e4):
    """Parameter suggestion when the active set is known to be constant.

    ``activity`` is ``"all-inactive"`` (favor a vanishing step size) or
    ``"all-active"`` (favor a huge one); finite surrogates of the limits
    are returned together with relaxation 1.
    """
    if activity == "all-inactive":
        return shrink * rho_star, 1.0
    if activity == "all-active":
        return grow * rho_star, 1.0
    raise ValueError("activity must be 'all-inactive' or 'all-active'")


# ---------------------------------------------------------------------------
# solver

def _apply_scaling(A, scaling):
    if scaling is None:
        return np.asarray(A, dtype=float)
    scaling = np.asarray(scaling, dtype=float).reshape(-1)
    if scaling.shape[0] != A.shape[0] or np.any(scaling <= 0):
        raise ValueError("scaling must be a positive vector of length m")
    return scaling[:, None] * A


def default_init(problem, scaling=None):
    """x = 0, slack clipped at the constraint offsets, dual zero."""
    c = problem.c if scaling is None else np.asarray(scaling) * problem.c
    return (np.zeros(problem.n), np.maximum(0.0, c), np.zeros(problem.m))


def scaled_problem(problem, scaling):
    """The problem the iteration actually runs on under a row scaling."""
    if scaling is None:
        return problem
    scaling = np.asarray(scaling, dtype=float)
    return QpProblem(problem.cost, scaling[:, None] * problem.A,
                     scaling * problem.c)


@dataclass(frozen=True)
class QpState:
    """One iterate: primal point, slack, scaled dual, and the indicator /
    sign vectors derived from them."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    k: int

    @property
    def v(self):
        return self.z + self.u

    @property
    def d(self):
        # indicator of active components; when a component of v is exactly
        # zero the solver's reported vectors resolve the tie to active
        return (self.u > 0).astype(int)

    @property
    def f(self):
        return 2 * self.d - 1

    @property
    def fv(self):
        return self.u - self.z


@dataclass
class ResidualTrace:
    """Per-iteration residual norms and slow-convergence diagnostics.

    ``fv_norm[k]`` is the norm of the one-step difference of the
    sign-weighted auxiliary vector; ``eps``/``delta``/``zeta_lb`` are the
    lower-bound diagnostics (NaN where the denominator vanished).
    Histories (with the initial point in row 0) are present only when the
    solve recorded iterates.
    """

    r_norm: np.ndarray
    s_norm: np.ndarray
    fv_norm: np.ndarray
    eps: np.ndarray
    delta: np.ndarray
    zeta_lb: np.ndarray
    x_hist: np.ndarray | None = None
    z_hist: np.ndarray | None = None
    u_hist: np.ndarray | None = None

    def state(self, k):
        """Recorded iterate k (0 is the initial point)."""
        if self.x_hist is None:
            raise ValueError("solve was run without record_iterates")
        return QpState(self.x_hist[k], self.z_hist[k], self.u_hist[k], k)

    @property
    def iterations(self):
        return self.r_norm.shape[0]

    def write_csv(self, path, seed=None):
        with open(path, "w") as fh:
            if seed is not None:
                fh.write(f"# seed={seed}\n")
            fh.write("k,r_norm,s_norm,fv_norm,eps_k,delta_k,zeta_lb_k\n")
            for k in range(self.iterations):
                fh.write(f"{k + 1},{self.r_norm[k]!r},{self.s_norm[k]!r},"
                         f"{self.fv_norm[k]!r},{self.eps[k]!r},"
                         f"{self.delta[k]!r},{self.zeta_lb[k]!r}\n")


_STATUS = {_kernels.CONVERGED: "converged", _kernels.MAX_ITER: "max_iterations",
           _kernels.DIVERGED: "diverged"}


@dataclass
class QpSolution:
    """Solver output; slack/dual live in the (possibly scaled) iteration
    space, with original-space views provided as properties."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    f: np.ndarray
    d: np.ndarray
    rho: float
    alpha: float
    scaling: np.ndarray | None
    status: str
    trace: ResidualTrace

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        return self.trace.iterations

    @property
    def slack(self):
        """Slack of the original (unscaled) constraints."""
        return self.z if self.scaling is None else self.z / self.scaling

    @property
    def multipliers(self):
        """Inequality multipliers of the original problem."""
        mu = self.rho * self.u
        return mu if self.scaling is None else self.scaling * mu


def cached_system_inverse(Q, A, rho, _cache={}):
    """Inverse of the x-update system matrix, one Cholesky per (A, rho)."""
    key = (A.shape, float(rho), Q.tobytes(), A.tobytes())
    hit = _cache.get(key)
    if hit is not None:
        return hit
    K = Q + rho * (A.T @ A)
    G = np.linalg.cholesky((K + K.T) / 2)
    Ginv = np.linalg.inv(G)
    Kinv = np.ascontiguousarray(Ginv.T @ Ginv)
    if len(_cache) > 64:
        _cache.clear()
    _cache[key] = Kinv
    return Kinv


def iteration_matrix(problem, rho, scaling=None):
    """Dense matrix driving the auxiliary-residual recursion.

    Its eigenvalues are ``rho*lam / (1 + rho*lam)`` over the eigenvalues
    ``lam`` of the constraint Gram matrix, which pins the contraction
    bound used by the convergence theory.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    A = _apply_scaling(problem.A, scaling)
    Kinv = cached_system_inverse(problem.Q, A, rho)
    M = rho * (A @ Kinv @ A.T)
    return (M + M.T) / 2


def contraction_bound(problem, rho, scaling=None):
    """Per-step bound on the auxiliary-residual contraction (<= 1)."""
    M = iteration_matrix(problem, rho, scaling)
    values = linalg.sym_eig(M).values
    return float(0.5 * np.max(np.abs(2.0 * values - 1.0)) + 0.5)


def solve(problem, rho, alpha=1.0, scaling=None, init=None, tol=DEFAULT_TOL,
          max_iter=DEFAULT_MAX_ITER, guard=DEFAULT_GUARD, diagnostics=True,
          record_iterates=False):
    """Run the splitting iteration on ``A x <= c``.

    ``alpha`` in (0, 2] over-relaxes (1 is the standard iteration);
    ``scaling`` applies a positive diagonal row scaling to the constraint
    block (``init``, when given, lives in the scaled iteration space).
    Stops when ``max(|r|, |s|) <= tol``, at ``max_iter``, or when
    the iterate norm passes ``guard`` (a divergence signal for infeasible
    or unbounded instances).  With ``diagnostics`` the trace carries the
    slow-convergence lower-bound series; with ``record_iterates`` full
    iterate histories (memory scales with ``max_iter``).
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if not 0 < alpha <= 2:
        raise ValueError("alpha must lie in (0, 2]")
    A = np.ascontiguousarray(_apply_scaling(problem.A, scaling))
    c = problem.c if scaling is None else np.asarray(scaling) * problem.c
    c = np.ascontiguousarray(c, dtype=float)
    q = np.ascontiguousarray(problem.q, dtype=float)
    Kinv = cached_system_inverse(problem.Q, A, rho)
    At = np.ascontiguousarray(A.T)
    M = rho * (A @ Kinv @ A.T) if diagnostics else np.zeros((0, 0))
    M = np.ascontiguousarray(M)
    if init is None:
        x0, z0, u0 = default_init(problem, scaling)
    else:
        x0, z0, u0 = (np.asarray(v, dtype=float).copy() for v in init)
    out = _kernels.qp_loop(Kinv, A, At, M, q, c, float(rho), float(alpha),
                           x0, z0, u0, float(tol), int(max_iter),
                           float(guard), bool(record_iterates))
    (niter, status, r, s, fv, eps, dlt, zlb, x, z, u, t, hists) = out
    trace = ResidualTrace(r_norm=r, s_norm=s, fv_norm=fv, eps=eps, delta=dlt,
                          zeta_lb=zlb)
    if hists is not None:
        trace.x_hist, trace.z_hist, trace.u_hist = hists
    f = np.where(t >= 0.0, 1, -1).astype(int)  # sign(0) fixed to +1
    d = ((1 + f) // 2).astype(int)
    sc = None if scaling is None else np.asarray(scaling, dtype=float)
    return QpSolution(x=x, z=z, u=u, f=f, d=d, rho=float(rho),
                      alpha=float(alpha), scaling=sc, status=_STATUS[status],
                      trace=trace)


# ---------------------------------------------------------------------------
# optimality and identity checks

@dataclass(frozen=True)
class KktReport:
    """Worst violations of the optimality conditions at a candidate point."""

    stationarity: float
    primal: float
    complementarity: float
    dual_sign: float
    tol: float

    @property
    def ok(self):
        return max(self.stationarity, self.primal, self.complementarity,
                   self.dual_sign) <= self.tol


def kkt_check(problem, x, multipliers, tol=1e-6):
    """Check a primal/multiplier pair against the QP optimality system."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(multipliers, dtype=float)
    station = np.linalg.norm(problem.Q @ x + problem.q + problem.A.T @ mu,
                             ord=np.inf)
    slack = problem.c - problem.A @ x
    primal = float(max(0.0, -slack.min()))
    comp = float(np.abs(mu * slack).max())
    dual = float(max(0.0, -mu.min()))
    return KktReport(float(station), primal, comp, dual, tol)


def solution_kkt(problem, sol, tol=1e-6):
    return kkt_check(problem, sol.x, sol.multipliers, tol)


@dataclass(frozen=True)
class IdentityReport:
    """Deviations of the residual identities and bounds for one step."""

    eq_minus: float
    eq_plus: float
    bound_r: float
    bound_s: float
    tol: float

    @property
    def ok(self):
        return (self.eq_minus <= self.tol and self.eq_plus <= self.tol
                and self.bound_r <= self.tol and self.bound_s <= self.tol)


def residual_identities_check(problem, rho, state_k, state_k1, alpha=1.0,
                              tol=1e-8, splitting=None, a_norm=None):
    """Verify the split of the auxiliary residual into primal/dual parts.

    For consecutive iterates the sign-weighted difference decomposes
    exactly into the primal residual minus the mapped dual residual minus
    the nullspace component of the slack change (and the unsigned
    difference into their sum); the norms of the primal and dual residuals
    are bounded by the auxiliary one.  With relaxation the two equalities
    pick up the relaxation factor; ``alpha=1`` is the plain form.

    Deviations are measured relative to the local residual scale.
    """
    if splitting is None:
        splitting = problem.splitting
    A, c = problem.A, problem.c
    if a_norm is None:
        a_norm = np.linalg.norm(A, 2)
    x1, z0, u0 = state_k1.x, state_k.z, state_k.u
    z1, u1 = state_k1.z, state_k1.u
    r = A @ x1 + z1 - c
    s = rho * (A.T @ (z1 - z0))
    dz = z1 - z0
    w_minus = (u1 - z1) - (u0 - z0)
    w_plus = (z1 + u1) - (z0 + u0)
    mapped = splitting.r_map @ s / rho
    null_part = splitting.null_proj.matrix @ dz
    scale = max(1.0, np.linalg.norm(w_minus), np.linalg.norm(w_plus))
    eq_minus = np.linalg.norm(w_minus - alpha * (r - mapped - null_part)) / scale
    eq_plus = np.linalg.norm(
        w_plus - alpha * r - (2.0 - alpha) * (mapped + null_part)) / scale
    wnorm = np.linalg.norm(w_minus)
    bound_r = max(0.0, np.linalg.norm(r) - wnorm) / scale
    bound_s = max(0.0, np.linalg.norm(s) - rho * a_norm * wnorm) / scale
    return IdentityReport(float(eq_minus), float(eq_plus), float(bound_r),
                          float(bound_s), tol)


def check_trace_identities(problem, rho, trace, alpha=1.0, tol=1e-8):
    """Run the identity check across every recorded consecutive pair.

    Returns the worst :class:`IdentityReport` over the trace.
    """
    if trace.x_hist is None:
        raise ValueError("trace has no recorded iterates")
    splitting = problem.splitting
    anorm = np.linalg.norm(problem.A, 2)
    worst = IdentityReport(0.0, 0.0, 0.0, 0.0, tol)
    for k in range(trace.iterations):
        rep = residual_identities_check(problem, rho, trace.state(k),
                                        trace.state(k + 1), alpha=alpha,
                                        tol=tol, splitting=splitting,
                                        a_norm=anorm)
        worst = IdentityReport(max(worst.eq_minus, rep.eq_minus),
                               max(worst.eq_plus, rep.eq_plus),
                               max(worst.bound_r, rep.bound_r),
                               max(worst.bound_s, rep.bound_s), tol)
    return worst


def lower_bound_step(problem, rho, state_prev, state_curr, scaling=None):
    """Slow-convergence diagnostics for one consecutive state pair.

    Returns ``(eps, delta, zeta_lb)`` or ``None`` when the auxiliary
    residual difference vanishes (diagnostic undefined at that step).
    """
    M = iteration_matrix(problem, rho, scaling)
    fvd = state_curr.fv - state_prev.fv
    denom = np.linalg.norm(fvd)
    if denom <= DIAG_FLOOR:
        return None
    eps = np.linalg.norm(M @ (state_curr.v - state_prev.v)) / denom
    dlt = np.linalg.norm(state_curr.u - state_prev.u) / denom
    return float(eps), float(dlt), float(abs(dlt - eps))
