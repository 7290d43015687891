"""Splitting solver for quadratic costs with quadratic consensus penalty.

Covers the standard and over-relaxed iterations, closed-form optimal
step-size selection, the dual-error iteration matrix and its scalar
contraction factors, plus gradient and heavy-ball comparators.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels, linalg
from .problems import L2Problem, QuadCost

DEFAULT_STAGNATION_REL = 1e-10
DEFAULT_MAX_ITER = 100_000
DEFAULT_GUARD = 1e12


def factor(rho, delta, lam):
    """Dual contraction factor of one eigenmode at step size ``rho``.

    Always lies in (0, 1) for positive arguments; equals 1/2 when
    ``rho == delta``.
    """
    return (rho * rho + lam * delta) / (rho * rho + lam * delta
                                        + (lam + delta) * rho)


def relaxed_factor(alpha, rho, delta, lam):
    """Signed eigenmode factor of the relaxed iteration.

    Reduces to :func:`factor` at ``alpha == 1`` and vanishes for every
    mode at ``(rho, alpha) == (delta, 2)``.
    """
    return 1.0 - alpha * rho * (lam + delta) / ((rho + lam) * (rho + delta))


def relaxation_bound(rho, delta, lams):
    """Upper end of the relaxation interval that guarantees convergence."""
    lams = np.asarray(lams, dtype=float)
    return float(2.0 * np.min((lams + rho) * (rho + delta)
                              / (rho * delta + rho * lams)))


def error_matrix(problem, rho):
    """Matrix propagating the dual error of the standard iteration.

    Its eigenvalues are ``factor(rho, delta, lam_i)`` over the eigenvalues
    ``lam_i`` of Q; at ``rho == delta`` it is exactly ``I/2``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    Q, delta = problem.Q, problem.delta
    n = Q.shape[0]
    inv = np.linalg.inv(Q + rho * np.eye(n))
    return (delta * np.eye(n) + rho * (rho - delta) * inv) / (delta + rho)


def relaxed_error_matrix(problem, rho, alpha):
    """Dual-error matrix of the relaxed iteration (zero at (delta, 2))."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    Q, delta = problem.Q, problem.delta
    n = Q.shape[0]
    inv = np.linalg.inv(Q + rho * np.eye(n))
    inner = alpha * (rho - delta) * inv + (1.0 - alpha) * np.eye(n)
    return (delta * np.eye(n) + rho * inner) / (delta + rho)


@dataclass(frozen=True)
class TuningReport:
    """Optimal step size, its worst-case factor, and the spectrum regime."""

    rho_star: float
    zeta_star: float
    regime: str

    def to_dict(self):
        return {"rho_star": self.rho_star, "zeta_star": self.zeta_star,
                "regime": self.regime}


def tune(lam_min, lam_max, delta):
    """Closed-form optimal step size from the extreme eigenvalues of Q.

    Three regimes: ``delta`` below the spectrum, inside it (step size
    ``delta`` itself, factor exactly 1/2), or above it.
    """
    if not (0 < lam_min <= lam_max):
        raise ValueError("need 0 < lam_min <= lam_max")
    if delta < lam_min:
        rho = np.sqrt(delta * lam_min)
        zeta = 1.0 / (1.0 + (delta + lam_min) / (2.0 * rho))
        return TuningReport(float(rho), float(zeta), "below")
    if delta > lam_max:
        rho = np.sqrt(delta * lam_max)
        zeta = 1.0 / (1.0 + (delta + lam_max) / (2.0 * rho))
        return TuningReport(float(rho), float(zeta), "above")
    return TuningReport(float(delta), 0.5, "inside")


def tune_problem(problem):
    """:func:`tune` driven by the computed spectrum of ``problem.Q``."""
    values = linalg.sym_eig(problem.Q).values
    return tune(values[0], values[-1], problem.delta)


def worst_factor(rho, delta, lams):
    """max of :func:`factor` over a spectrum (the analytic run factor)."""
    lams = np.asarray(lams, dtype=float)
    return float(np.max(factor(rho, delta, lams)))


@dataclass
class L2Trace:
    """Per-iteration dual and primal errors of one solve.

    ``dual_error[k]`` is the distance of the consensus iterate from its
    limit (index 0 is the initial point); ``status`` records which stop
    rule fired.  Histories are populated only when the solve recorded
    iterates.
    """

    dual_error: np.ndarray
    x_error: np.ndarray
    iterations: int
    status: str
    alpha_ok: bool
    x: np.ndarray
    z: np.ndarray
    mu: np.ndarray
    x_hist: np.ndarray | None = None
    z_hist: np.ndarray | None = None
    mu_hist: np.ndarray | None = None

    @property
    def converged(self):
        return self.status in ("stagnated", "target")

    def write_csv(self, path, seed=None):
        with open(path, "w") as fh:
            if seed is not None:
                fh.write(f"# seed={seed}\n")
            fh.write("k,dual_error,x_error\n")
            for k in range(self.dual_error.shape[0]):
                fh.write(f"{k},{self.dual_error[k]!r},{self.x_error[k]!r}\n")


_STATUS = {_kernels.CONVERGED: "target", _kernels.MAX_ITER: "max_iterations",
           _kernels.DIVERGED: "diverged", _kernels.STAGNATED: "stagnated"}


def solve(problem, rho, alpha=1.0, init=None, stagnation_rel=DEFAULT_STAGNATION_REL,
          err_target=0.0, max_iter=DEFAULT_MAX_ITER, record_iterates=False):
    """Run the splitting iteration; ``alpha`` other than 1 over-relaxes.

    The limit point is computed directly and the trace carries the exact
    per-step errors against it.  A relaxation parameter outside the
    guaranteed-convergence interval only warns (divergence is a legitimate
    demonstration); the trace flags it via ``alpha_ok``.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    Q, q, delta = problem.Q, problem.q, problem.delta
    n = problem.n
    alpha_ok = True
    if alpha > 2.0:
        bound = relaxation_bound(rho, delta, linalg.sym_eig(Q).values)
        if alpha >= bound:
            alpha_ok = False
            warnings.warn(
                f"alpha={alpha:g} is outside the convergent interval "
                f"(0, {bound:g}); running anyway", RuntimeWarning)
    Kinv = _cached_inverse(Q, rho)
    z_star = np.linalg.solve(Q + delta * np.eye(n), -q)
    if init is None:
        x0 = np.zeros(n); z0 = np.zeros(n); mu0 = np.zeros(n)
    else:
        x0, z0, mu0 = (np.asarray(v, dtype=float).copy() for v in init)
    out = _kernels.l2_loop(Kinv, q, float(delta), float(rho), float(alpha),
                           z_star, z_star, x0, z0, mu0,
                           float(stagnation_rel), float(err_target),
                           int(max_iter), DEFAULT_GUARD, bool(record_iterates))
    niter, status, dual_err, x_err, x, z, mu, hists = out
    trace = L2Trace(dual_error=dual_err, x_error=x_err, iterations=niter,
                    status=_STATUS[status], alpha_ok=alpha_ok, x=x, z=z, mu=mu)
    if hists is not None:
        trace.x_hist, trace.z_hist, trace.mu_hist = hists
    return trace


def _cached_inverse(Q, rho, _cache={}):
    # one Cholesky-backed inverse per matrix/rho pair; keyed by content so
    # batches sharing Q reuse the factorization
    key = (Q.shape[0], float(rho), Q.tobytes())
    hit = _cache.get(key)
    if hit is not None:
        return hit
    n = Q.shape[0]
    G = np.linalg.cholesky(Q + rho * np.eye(n))
    Ginv = np.linalg.inv(G)
    Kinv = np.ascontiguousarray(Ginv.T @ Ginv)
    if len(_cache) > 64:
        _cache.clear()
    _cache[key] = Kinv
    return Kinv


def gradient_params(lam_min, lam_max, delta):
    """Optimal fixed step for plain gradient descent on the joint cost."""
    lo, hi = lam_min + delta, lam_max + delta
    return 2.0 / (lo + hi)


def heavy_ball_params(lam_min, lam_max, delta):
    """Optimal step and momentum pair for the two-term recursion."""
    lo, hi = lam_min + delta, lam_max + delta
    a = 4.0 / (np.sqrt(lo) + np.sqrt(hi)) ** 2
    b = (np.sqrt(hi) - np.sqrt(lo)) ** 2 / (np.sqrt(lo) + np.sqrt(hi)) ** 2
    return float(a), float(b)


def gradient_factor(lam_min, lam_max, delta):
    lo, hi = lam_min + delta, lam_max + delta
    return (hi - lo) / (hi + lo)


def heavy_ball_factor(lam_min, lam_max, delta):
    lo, hi = lam_min + delta, lam_max + delta
    return (np.sqrt(hi) - np.sqrt(lo)) / (np.sqrt(hi) + np.sqrt(lo))


@dataclass
class BaselineTrace:
    x_error: np.ndarray
    iterations: int
    status: str
    x: np.ndarray

    @property
    def converged(self):
        return self.status == "target"


def _baseline_loop(problem, step_fn, x0, err_target, max_iter):
    Q, q, delta = problem.Q, problem.q, problem.delta
    x_star = np.linalg.solve(Q + delta * np.eye(problem.n), -q)
    x = x0.copy()
    errs = [np.linalg.norm(x - x_star)]
    status = "max_iterations"
    state = None
    for k in range(max_iter):
        x, state = step_fn(x, state, Q, q, delta)
        e = np.linalg.norm(x - x_star)
        errs.append(e)
        if e <= err_target:
            status = "target"
            break
        if e > DEFAULT_GUARD:
            status = "diverged"
            break
    return BaselineTrace(np.array(errs), len(errs) - 1, status, x)


def baseline_gradient(problem, init=None, err_target=1e-10,
                      max_iter=DEFAULT_MAX_ITER, step=None):
    """Gradient descent with the optimal fixed step (unless overridden)."""
    values = linalg.sym_eig(problem.Q).values
    gamma = gradient_params(values[0], values[-1], problem.delta) \
        if step is None else step
    x0 = np.zeros(problem.n) if init is None else np.asarray(init, dtype=float)

    def one(x, state, Q, q, delta):
        return x - gamma * (Q @ x + q + delta * x), None

    return _baseline_loop(problem, one, x0, err_target, max_iter)


def baseline_heavy_ball(problem, init=None, err_target=1e-10,
                        max_iter=DEFAULT_MAX_ITER, params=None):
    """Two-term momentum recursion with the optimal (step, momentum)."""
    values = linalg.sym_eig(problem.Q).values
    a, b = heavy_ball_params(values[0], values[-1], problem.delta) \
        if params is None else params
    x0 = np.zeros(problem.n) if init is None else np.asarray(init, dtype=float)

    def one(x, x_prev, Q, q, delta):
        prev = x if x_prev is None else x_prev
        x_next = x - a * (Q @ x + q + delta * x) + b * (x - prev)
        return x_next, x

    return _baseline_loop(problem, one, x0, err_target, max_iter)


@dataclass(frozen=True)
class WeightedTransform:
    """Change of variables reducing a weighted penalty to the plain form."""

    problem: L2Problem
    weight_sqrt: np.ndarray
    weight_inv_sqrt: np.ndarray

    def map_back(self, x):
        """Pull a transformed-space solution back to original variables."""
        return self.weight_inv_sqrt @ np.asarray(x, dtype=float)


def weighted_transform(Q_bar, q_bar, delta, weight):
    """Absorb a positive definite penalty weight into the quadratic cost.

    Solving the returned problem and mapping the optimizer back through
    ``map_back`` reproduces the optimizer of the weighted original.
    """
    W = linalg.check_symmetric(weight, name="weight")
    dec = linalg.sym_eig(W)
    if dec.values[0] <= 0:
        raise ValueError("weight must be positive definite")
    root = np.sqrt(dec.values)
    W_sqrt = (dec.vectors * root) @ dec.vectors.T
    W_inv_sqrt = (dec.vectors / root) @ dec.vectors.T
    Q = W_inv_sqrt @ np.asarray(Q_bar, dtype=float) @ W_inv_sqrt
    Q = (Q + Q.T) / 2
    q = W_inv_sqrt @ np.asarray(q_bar, dtype=float).reshape(-1)
    prob = L2Problem(QuadCost(Q, q), delta, weight=W)
    return WeightedTransform(prob, W_sqrt, W_inv_sqrt)


def empirical_factor(errors, target=1e-9, window=50, floor=1e-13):
    """Tail estimate of the per-step contraction of an error sequence.

    Geometric mean of consecutive ratios over the last ``window`` steps
    before the sequence first drops below ``target``, skipping steps
    already at the floating-point floor.  NaN when fewer than one usable
    ratio exists.
    """
    errors = np.asarray(errors, dtype=float)
    below = np.nonzero(errors <= target)[0]
    stop = int(below[0]) if below.size else errors.shape[0] - 1
    start = max(0, stop - window)
    ratios = []
    for j in range(start, stop):
        if errors[j] >= floor and errors[j + 1] > 0.0:
            ratios.append(errors[j + 1] / errors[j])
    if not ratios:
        return float("nan")
    return float(np.exp(np.mean(np.log(ratios))))
