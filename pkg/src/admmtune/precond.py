"""Optimal diagonal scaling of the constraint rows.

Minimizes the nonzero-eigenvalue spread of the scaled constraint Gram
matrix, which the tuned convergence factors increase in.  The search
solves the equivalent convex program (minimize the top eigenvalue of a
weighted Gram form subject to its restriction staying at least the
identity) with a dependency-free first-order scheme: a monotone ratio
descent to locate the optimum, then bisection on the bound with Polyak
feasibility steps to certify it.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg

_CLIP = (1e-6, 1e6)


def nonzero_eig_ratio(Q, A, w):
    """Spread (max/min) of the nonzero eigenvalues of the scaled Gram
    matrix; invariant to uniform rescaling of ``w``."""
    w = np.asarray(w, dtype=float).reshape(-1)
    if np.any(w <= 0):
        raise ValueError("w must be positive")
    L = np.sqrt(w)
    B = L[:, None] * np.asarray(A, dtype=float)
    G = B @ np.linalg.solve(Q, B.T)
    values = linalg.sym_eig((G + G.T) / 2).values
    nz = values[values > linalg.RANK_TOL * max(values.max(), 1e-300)]
    if nz.size == 0:
        raise ValueError("scaled Gram matrix is numerically zero")
    return float(nz.max() / nz.min())


@dataclass(frozen=True)
class ScalingResult:
    """Optimal weights ``w`` and row scale ``L = sqrt(w)``.

    ``t_star`` is the certified bound on the top eigenvalue under the
    normalization pinning the smallest restricted eigenvalue at one, so it
    equals the achieved spread.  ``stagnated`` marks a fallback to the
    unscaled problem (the search found nothing better).
    """

    w: np.ndarray
    L: np.ndarray
    t_star: float
    ratio_before: float
    ratio_after: float
    stagnated: bool

    def to_dict(self):
        return {"w": self.w.tolist(), "L": self.L.tolist(),
                "t_star": self.t_star, "ratio_before": self.ratio_before,
                "ratio_after": self.ratio_after, "stagnated": self.stagnated}


def optimal_scaling(Q, A, bisect_steps=40, feas_steps=1500, descent_steps=2000):
    """Search the diagonal row scaling minimizing the eigenvalue spread.

    Internals use the factored form: with ``R`` the inverse Cholesky
    factor of Q and ``B = A R``, the nonzero eigenvalues of the scaled
    Gram matrix equal those of ``B' diag(w) B``, whose restriction to the
    range of ``B'`` (columns of ``P``) is what the lower normalization
    acts on.  Eigenvector outer products supply the subgradients.
    """
    Q = linalg.check_symmetric(Q, name="Q")
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    Rq = linalg.chol_inv_factor(Q)
    B = A @ Rq
    BtB = B.T @ B
    ev, V = np.linalg.eigh((BtB + BtB.T) / 2)
    P = V[:, ev > linalg.RANK_TOL * max(ev.max(), 1e-300)]

    def pieces(w):
        S = B.T @ (w[:, None] * B)
        S = (S + S.T) / 2
        lam, vec = np.linalg.eigh(S)
        Sp = P.T @ S @ P
        Sp = (Sp + Sp.T) / 2
        lam_p, vec_p = np.linalg.eigh(Sp)
        return lam[-1], vec[:, -1], lam_p[0], vec_p[:, 0]

    def pin(w):
        # normalize so the smallest restricted eigenvalue is one
        _, _, lmin, _ = pieces(w)
        return w / lmin if lmin > 0 else w

    def ratio(w):
        lmax, _, lmin, _ = pieces(w)
        return lmax / lmin if lmin > 0 else np.inf

    ratio_before = float(ratio(np.ones(m)))
    w = pin(np.ones(m))

    # stage 1: monotone descent on the spread itself
    r = ratio(w)
    for _ in range(descent_steps):
        lmax, vmax, lmin, vmin = pieces(w)
        g = (B @ vmax) ** 2 - r * ((B @ (P @ vmin)) ** 2)
        gg = float(g @ g)
        if gg <= 1e-300:
            break
        step = 0.5 * r / gg
        improved = False
        for _ in range(30):
            w_try = pin(np.clip(w - step * g, *_CLIP))
            r_try = ratio(w_try)
            if r_try < r - 1e-14 * max(1.0, r):
                w, r, improved = w_try, r_try, True
                break
            step *= 0.5
        if not improved:
            break

    # stage 2: bisection on the bound, Polyak feasibility steps inside
    t_lo, t_hi = 1.0, float(r)
    w_best = w.copy()
    for _ in range(bisect_steps):
        t = 0.5 * (t_lo + t_hi)
        w_try = w_best.copy()
        feasible = False
        for _ in range(feas_steps):
            lmax, vmax, lmin, vmin = pieces(w_try)
            violation = max(lmax - t, 1.0 - lmin)
            if violation <= 0.0:
                feasible = True
                break
            if (lmax - t) >= (1.0 - lmin):
                g = (B @ vmax) ** 2
            else:
                g = -((B @ (P @ vmin)) ** 2)
            w_try = np.clip(w_try - (violation / max(float(g @ g), 1e-300)) * g,
                            *_CLIP)
        if feasible:
            t_hi, w_best = t, pin(w_try)
        else:
            t_lo = t

    w_best = pin(w_best)
    ratio_after = float(ratio(w_best))
    stagnated = ratio_after > ratio_before
    if stagnated:
        w_best, ratio_after = np.ones(m), ratio_before
    return ScalingResult(w=w_best, L=np.sqrt(w_best), t_star=float(t_hi),
                         ratio_before=ratio_before, ratio_after=ratio_after,
                         stagnated=stagnated)
