"""Pure-NumPy iteration kernels.

Reference implementation of the solver inner loops.  The compiled module
``ckern`` mirrors these functions one-for-one; either backend may be active
at runtime (see ``admmtune._kernels``).  Within a backend the loops are
deterministic, so repeated runs on identical inputs give identical traces.
"""

import numpy as np

CONVERGED = 0
MAX_ITER = 1
DIVERGED = 2
STAGNATED = 3

_DIAG_FLOOR = 1e-12  # fv-difference norms below this give undefined diagnostics


def qp_loop(Kinv, A, At, M, q, c, rho, alpha, x, z, u, tol, max_iter, guard,
            record):
    """Inequality-constrained QP splitting loop (standard and relaxed).

    ``Kinv`` is the cached inverse of the x-update system matrix, ``M`` the
    matrix driving the auxiliary-residual recursion (pass an empty array to
    skip the per-step diagnostics).  ``alpha=1`` recovers the unrelaxed
    iteration bit-for-bit.

    Returns ``(niter, status, r, s, fv, eps, dlt, zlb, x, z, u, t, hists)``
    where the per-iteration arrays have length ``niter`` and ``hists`` is
    ``(X, Z, U)`` with the initial point in row 0, or ``None``.
    """
    m, n = A.shape
    with_diag = M.size > 0
    r_hist = np.empty(max_iter)
    s_hist = np.empty(max_iter)
    fv_hist = np.empty(max_iter)
    eps_hist = np.full(max_iter, np.nan)
    dlt_hist = np.full(max_iter, np.nan)
    zlb_hist = np.full(max_iter, np.nan)
    if record:
        X = np.empty((max_iter + 1, n)); X[0] = x
        Z = np.empty((max_iter + 1, m)); Z[0] = z
        U = np.empty((max_iter + 1, m)); U[0] = u
    fv_prev = u - z
    t = np.zeros(m)
    guard2 = guard * guard
    status = MAX_ITER
    niter = max_iter
    for k in range(max_iter):
        v = z + u
        x = Kinv @ (-(q + rho * (At @ (v - c))))
        ax = A @ x
        t = alpha * (ax - c) - (1.0 - alpha) * z + u
        z_new = np.maximum(0.0, -t)
        u_new = t + z_new          # exact complementarity: one of z, u is 0
        rn = np.linalg.norm(ax + z_new - c)
        sn = np.linalg.norm(rho * (At @ (z_new - z)))
        fv = u_new - z_new
        fvn = np.linalg.norm(fv - fv_prev)
        r_hist[k] = rn
        s_hist[k] = sn
        fv_hist[k] = fvn
        if with_diag and fvn > _DIAG_FLOOR:
            dv = (z_new + u_new) - v
            eps_hist[k] = np.linalg.norm(M @ dv) / fvn
            dlt_hist[k] = np.linalg.norm(u_new - u) / fvn
            zlb_hist[k] = abs(dlt_hist[k] - eps_hist[k])
        z, u, fv_prev = z_new, u_new, fv
        if record:
            X[k + 1] = x; Z[k + 1] = z; U[k + 1] = u
        if max(rn, sn) <= tol:
            status = CONVERGED
            niter = k + 1
            break
        if x @ x + z @ z + u @ u > guard2:
            status = DIVERGED
            niter = k + 1
            break
    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             U[:niter + 1].copy()) if record else None
    return (niter, status, r_hist[:niter].copy(), s_hist[:niter].copy(),
            fv_hist[:niter].copy(), eps_hist[:niter].copy(),
            dlt_hist[:niter].copy(), zlb_hist[:niter].copy(),
            x.copy(), z.copy(), u.copy(), t.copy(), hists)


def fast_loop(Kinv, A, At, M, q, c, rho, x, z, u, tol, max_iter, guard,
              restart, reset_beta, pin_momentum, record):
    """Momentum-accelerated QP loop with residual-based restarts.

    The inner x/z/u updates are the unrelaxed updates evaluated at the
    extrapolated pair; with ``pin_momentum`` the extrapolation is the
    identity and the iterate sequence matches ``qp_loop`` at ``alpha=1``
    bit-for-bit.

    Returns ``(niter, status, r, s, fv, eps, dlt, zlb, alphas, betas,
    x, z, u, t, hists)``.
    """
    m, n = A.shape
    with_diag = M.size > 0
    one = 1.0
    r_hist = np.empty(max_iter)
    s_hist = np.empty(max_iter)
    fv_hist = np.empty(max_iter)
    eps_hist = np.full(max_iter, np.nan)
    dlt_hist = np.full(max_iter, np.nan)
    zlb_hist = np.full(max_iter, np.nan)
    a_hist = np.empty(max_iter)
    b_hist = np.empty(max_iter)
    if record:
        X = np.empty((max_iter + 1, n)); X[0] = x
        Z = np.empty((max_iter + 1, m)); Z[0] = z
        U = np.empty((max_iter + 1, m)); U[0] = u
    zh = z.copy()
    uh = u.copy()
    beta = 1.0
    res_prev = np.inf
    fv_prev = u - z
    t = np.zeros(m)
    guard2 = guard * guard
    status = MAX_ITER
    niter = max_iter
    for k in range(max_iter):
        vh = zh + uh
        x = Kinv @ (-(q + rho * (At @ (vh - c))))
        ax = A @ x
        t = one * (ax - c) - (1.0 - one) * zh + uh
        z_new = np.maximum(0.0, -t)
        u_new = t + z_new
        rn = np.linalg.norm(ax + z_new - c)
        sn = np.linalg.norm(rho * (At @ (z_new - z)))
        fv = u_new - z_new
        fvn = np.linalg.norm(fv - fv_prev)
        r_hist[k] = rn
        s_hist[k] = sn
        fv_hist[k] = fvn
        if with_diag and fvn > _DIAG_FLOOR:
            dv = (z_new + u_new) - (z + u)
            eps_hist[k] = np.linalg.norm(M @ dv) / fvn
            dlt_hist[k] = np.linalg.norm(u_new - u) / fvn
            zlb_hist[k] = abs(dlt_hist[k] - eps_hist[k])
        res = max(rn, sn)
        if pin_momentum:
            alpha_k = 1.0
            zh = z_new.copy()
            uh = u_new.copy()
        elif restart and not res < res_prev:
            alpha_k = 1.0
            if reset_beta:
                beta = 1.0
            zh = z_new.copy()
            uh = u_new.copy()
        else:
            beta_next = (1.0 + np.sqrt(1.0 + 4.0 * beta * beta)) / 2.0
            alpha_k = 1.0 + (beta - 1.0) / beta_next
            beta = beta_next
            zh = alpha_k * z_new + (1.0 - alpha_k) * z
            uh = alpha_k * u_new + (1.0 - alpha_k) * u
        a_hist[k] = alpha_k
        b_hist[k] = beta
        z, u, fv_prev, res_prev = z_new, u_new, fv, res
        if record:
            X[k + 1] = x; Z[k + 1] = z; U[k + 1] = u
        if res <= tol:
            status = CONVERGED
            niter = k + 1
            break
        if x @ x + z @ z + u @ u > guard2:
            status = DIVERGED
            niter = k + 1
            break
    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             U[:niter + 1].copy()) if record else None
    return (niter, status, r_hist[:niter].copy(), s_hist[:niter].copy(),
            fv_hist[:niter].copy(), eps_hist[:niter].copy(),
            dlt_hist[:niter].copy(), zlb_hist[:niter].copy(),
            a_hist[:niter].copy(), b_hist[:niter].copy(),
            x.copy(), z.copy(), u.copy(), t.copy(), hists)


def l2_loop(Kinv, q, delta, rho, alpha, z_star, x_star, x, z, mu,
            stag_rel, err_target, max_iter, guard, record):
    """Regularized-minimization splitting loop (standard and relaxed).

    Stops on z-stagnation (``stag_rel``), on the optional dual-error target,
    on the iterate-norm guard, or at ``max_iter``.

    Returns ``(niter, status, dual_err, x_err, x, z, mu, hists)`` where the
    error arrays have length ``niter + 1`` (index 0 is the initial point).
    """
    n = q.shape[0]
    dual_err = np.empty(max_iter + 1)
    x_err = np.empty(max_iter + 1)
    dual_err[0] = np.linalg.norm(z - z_star)
    x_err[0] = np.linalg.norm(x - x_star)
    if record:
        X = np.empty((max_iter + 1, n)); X[0] = x
        Z = np.empty((max_iter + 1, n)); Z[0] = z
        MU = np.empty((max_iter + 1, n)); MU[0] = mu
    status = MAX_ITER
    niter = max_iter
    for k in range(max_iter):
        x = Kinv @ (rho * z - mu - q)
        z_new = (mu + rho * (alpha * x + (1.0 - alpha) * z)) / (delta + rho)
        mu = mu + rho * (alpha * (x - z_new) + (1.0 - alpha) * (z - z_new))
        dz = np.linalg.norm(z_new - z)
        z = z_new
        e = np.linalg.norm(z - z_star)
        dual_err[k + 1] = e
        x_err[k + 1] = np.linalg.norm(x - x_star)
        if record:
            X[k + 1] = x; Z[k + 1] = z; MU[k + 1] = mu
        if err_target > 0.0 and e <= err_target:
            status = CONVERGED
            niter = k + 1
            break
        if dz <= stag_rel * max(1.0, np.linalg.norm(z)):
            status = STAGNATED
            niter = k + 1
            break
        if e > guard:
            status = DIVERGED
            niter = k + 1
            break
    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             MU[:niter + 1].copy()) if record else None
    return (niter, status, dual_err[:niter + 1].copy(),
            x_err[:niter + 1].copy(), x.copy(), z.copy(), mu.copy(), hists)
