"""Momentum-accelerated splitting baseline with residual restarts.

The inner updates are the unrelaxed QP updates evaluated at extrapolated
slack/dual pairs; the extrapolation weight follows the accelerated
first-order schedule and falls back to 1 (a restart) whenever the
combined residual fails to decrease.  With the momentum pinned the
iterate sequence coincides bit-for-bit with the standard solver.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels, qp


def momentum_next(beta):
    """Successor of the extrapolation-driving scalar sequence."""
    return (1.0 + np.sqrt(1.0 + 4.0 * beta * beta)) / 2.0


@dataclass
class FastSolution:
    """Accelerated-run output; trace schema matches the standard solver."""

    x: np.ndarray
    z: np.ndarray
    u: np.ndarray
    rho: float
    scaling: np.ndarray | None
    status: str
    trace: qp.ResidualTrace
    alphas: np.ndarray
    betas: np.ndarray

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        return self.trace.iterations

    @property
    def multipliers(self):
        mu = self.rho * self.u
        return mu if self.scaling is None else self.scaling * mu


def solve_fast(problem, rho, init=None, scaling=None, tol=qp.DEFAULT_TOL,
               max_iter=qp.DEFAULT_MAX_ITER, guard=qp.DEFAULT_GUARD,
               restart=True, reset_beta_on_restart=True, pin_momentum=False,
               diagnostics=True, record_iterates=False):
    """Accelerated solve of ``A x <= c``.

    ``restart`` enables the residual-ratio rule (extrapolation weight 1
    on non-decreasing steps); ``reset_beta_on_restart`` also restarts the
    scalar schedule, the convention of the accelerated-method literature
    (switchable, as the rule itself leaves it open).  ``pin_momentum``
    forces weight 1 everywhere, reproducing the standard iteration
    exactly.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    A = np.ascontiguousarray(qp._apply_scaling(problem.A, scaling))
    c = problem.c if scaling is None else np.asarray(scaling) * problem.c
    c = np.ascontiguousarray(c, dtype=float)
    q = np.ascontiguousarray(problem.q, dtype=float)
    Kinv = qp.cached_system_inverse(problem.Q, A, rho)
    At = np.ascontiguousarray(A.T)
    M = rho * (A @ Kinv @ A.T) if diagnostics else np.zeros((0, 0))
    M = np.ascontiguousarray(M)
    if init is None:
        x0, z0, u0 = qp.default_init(problem, scaling)
    else:
        x0, z0, u0 = (np.asarray(v, dtype=float).copy() for v in init)
    out = _kernels.fast_loop(Kinv, A, At, M, q, c, float(rho), x0, z0, u0,
                             float(tol), int(max_iter), float(guard),
                             bool(restart), bool(reset_beta_on_restart),
                             bool(pin_momentum), bool(record_iterates))
    (niter, status, r, s, fv, eps, dlt, zlb, alphas, betas,
     x, z, u, t, hists) = out
    trace = qp.ResidualTrace(r_norm=r, s_norm=s, fv_norm=fv, eps=eps,
                             delta=dlt, zeta_lb=zlb)
    if hists is not None:
        trace.x_hist, trace.z_hist, trace.u_hist = hists
    sc = None if scaling is None else np.asarray(scaling, dtype=float)
    return FastSolution(x=x, z=z, u=u, rho=float(rho), scaling=sc,
                        status=qp._STATUS[status], trace=trace,
                        alphas=alphas, betas=betas)
