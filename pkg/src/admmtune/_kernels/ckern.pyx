# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled iteration kernels; mirrors ``pykern`` function-for-function."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

CONVERGED = 0
MAX_ITER = 1
DIVERGED = 2
STAGNATED = 3

cdef double _DIAG_FLOOR = 1e-12


cdef inline void _matvec(double[:, ::1] Mat, double[::1] vec,
                         double[::1] out, Py_ssize_t rows,
                         Py_ssize_t cols) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(rows):
        acc = 0.0
        for j in range(cols):
            acc += Mat[i, j] * vec[j]
        out[i] = acc


cdef inline double _nrm2(double[::1] vec, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double acc = 0.0
    for i in range(n):
        acc += vec[i] * vec[i]
    return sqrt(acc)


def qp_loop(double[:, ::1] Kinv, double[:, ::1] A, double[:, ::1] At,
            double[:, ::1] M, double[::1] q, double[::1] c, double rho,
            double alpha, x0, z0, u0, double tol, long max_iter,
            double guard, bint record):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef bint with_diag = M.shape[0] > 0

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    z_arr = np.array(z0, dtype=np.float64, copy=True)
    u_arr = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef double[::1] z = z_arr
    cdef double[::1] u = u_arr

    r_arr = np.empty(max_iter); s_arr = np.empty(max_iter)
    fv_arr = np.empty(max_iter)
    eps_arr = np.full(max_iter, np.nan)
    dlt_arr = np.full(max_iter, np.nan)
    zlb_arr = np.full(max_iter, np.nan)
    cdef double[::1] r_hist = r_arr
    cdef double[::1] s_hist = s_arr
    cdef double[::1] fv_hist = fv_arr
    cdef double[::1] eps_hist = eps_arr
    cdef double[::1] dlt_hist = dlt_arr
    cdef double[::1] zlb_hist = zlb_arr

    X = Z = U = None
    cdef double[:, ::1] Xv = None, Zv = None, Uv = None
    if record:
        X = np.empty((max_iter + 1, n)); Z = np.empty((max_iter + 1, m))
        U = np.empty((max_iter + 1, m))
        Xv = X; Zv = Z; Uv = U
        Xv[0, :] = x; Zv[0, :] = z; Uv[0, :] = u

    work_m = np.empty(m); work_n = np.empty(n); rhs_arr = np.empty(n)
    zn_arr = np.empty(m); un_arr = np.empty(m); fvp_arr = np.empty(m)
    t_arr = np.zeros(m); mdv_arr = np.empty(m)
    cdef double[::1] wm = work_m
    cdef double[::1] wn = work_n
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] z_new = zn_arr
    cdef double[::1] u_new = un_arr
    cdef double[::1] fv_prev = fvp_arr
    cdef double[::1] t = t_arr
    cdef double[::1] mdv = mdv_arr

    cdef double guard2 = guard * guard
    cdef long status = MAX_ITER
    cdef long niter = max_iter
    cdef Py_ssize_t i, j, k
    cdef double ti, rn, sn, fvn, fvi, dvn, dun, acc, eps_k, dlt_k, res

    for i in range(m):
        fv_prev[i] = u[i] - z[i]

    for k in range(max_iter):
        # x <- Kinv @ (-(q + rho * At (z + u - c)))
        for i in range(m):
            wm[i] = z[i] + u[i] - c[i]
        _matvec(At, wm, wn, n, m)
        for i in range(n):
            rhs[i] = -(q[i] + rho * wn[i])
        _matvec(Kinv, rhs, x, n, n)
        rn = 0.0
        sn = 0.0
        fvn = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            # t, z, u updates; alpha=1 reduces to the unrelaxed expressions
            ti = alpha * (acc - c[i]) - (1.0 - alpha) * z[i] + u[i]
            t[i] = ti
            if -ti > 0.0:
                z_new[i] = -ti
            else:
                z_new[i] = 0.0
            u_new[i] = ti + z_new[i]
            acc = acc + z_new[i] - c[i]
            rn += acc * acc
            fvi = (u_new[i] - z_new[i]) - fv_prev[i]
            fvn += fvi * fvi
        rn = sqrt(rn)
        fvn = sqrt(fvn)
        for i in range(m):
            wm[i] = z_new[i] - z[i]
        _matvec(At, wm, wn, n, m)
        for i in range(n):
            wn[i] = rho * wn[i]
        sn = _nrm2(wn, n)
        r_hist[k] = rn
        s_hist[k] = sn
        fv_hist[k] = fvn
        if with_diag and fvn > _DIAG_FLOOR:
            for i in range(m):
                wm[i] = (z_new[i] + u_new[i]) - (z[i] + u[i])
            _matvec(M, wm, mdv, m, m)
            dvn = _nrm2(mdv, m)
            dun = 0.0
            for i in range(m):
                acc = u_new[i] - u[i]
                dun += acc * acc
            dun = sqrt(dun)
            eps_k = dvn / fvn
            dlt_k = dun / fvn
            eps_hist[k] = eps_k
            dlt_hist[k] = dlt_k
            zlb_hist[k] = eps_k - dlt_k if eps_k > dlt_k else dlt_k - eps_k
        for i in range(m):
            fv_prev[i] = u_new[i] - z_new[i]
            z[i] = z_new[i]
            u[i] = u_new[i]
        if record:
            Xv[k + 1, :] = x; Zv[k + 1, :] = z; Uv[k + 1, :] = u
        res = rn if rn > sn else sn
        if res <= tol:
            status = CONVERGED
            niter = k + 1
            break
        acc = 0.0
        for i in range(n):
            acc += x[i] * x[i]
        for i in range(m):
            acc += z[i] * z[i] + u[i] * u[i]
        if acc > guard2:
            status = DIVERGED
            niter = k + 1
            break

    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             U[:niter + 1].copy()) if record else None
    return (niter, status, r_arr[:niter].copy(), s_arr[:niter].copy(),
            fv_arr[:niter].copy(), eps_arr[:niter].copy(),
            dlt_arr[:niter].copy(), zlb_arr[:niter].copy(),
            x_arr.copy(), z_arr.copy(), u_arr.copy(), t_arr.copy(), hists)


def fast_loop(double[:, ::1] Kinv, double[:, ::1] A, double[:, ::1] At,
              double[:, ::1] M, double[::1] q, double[::1] c, double rho,
              x0, z0, u0, double tol, long max_iter, double guard,
              bint restart, bint reset_beta, bint pin_momentum, bint record):
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t n = A.shape[1]
    cdef bint with_diag = M.shape[0] > 0
    cdef double one = 1.0

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    z_arr = np.array(z0, dtype=np.float64, copy=True)
    u_arr = np.array(u0, dtype=np.float64, copy=True)
    zh_arr = z_arr.copy(); uh_arr = u_arr.copy()
    cdef double[::1] x = x_arr
    cdef double[::1] z = z_arr
    cdef double[::1] u = u_arr
    cdef double[::1] zh = zh_arr
    cdef double[::1] uh = uh_arr

    r_arr = np.empty(max_iter); s_arr = np.empty(max_iter)
    fv_arr = np.empty(max_iter)
    eps_arr = np.full(max_iter, np.nan)
    dlt_arr = np.full(max_iter, np.nan)
    zlb_arr = np.full(max_iter, np.nan)
    a_arr = np.empty(max_iter); b_arr = np.empty(max_iter)
    cdef double[::1] r_hist = r_arr
    cdef double[::1] s_hist = s_arr
    cdef double[::1] fv_hist = fv_arr
    cdef double[::1] eps_hist = eps_arr
    cdef double[::1] dlt_hist = dlt_arr
    cdef double[::1] zlb_hist = zlb_arr
    cdef double[::1] a_hist = a_arr
    cdef double[::1] b_hist = b_arr

    X = Z = U = None
    cdef double[:, ::1] Xv = None, Zv = None, Uv = None
    if record:
        X = np.empty((max_iter + 1, n)); Z = np.empty((max_iter + 1, m))
        U = np.empty((max_iter + 1, m))
        Xv = X; Zv = Z; Uv = U
        Xv[0, :] = x; Zv[0, :] = z; Uv[0, :] = u

    work_m = np.empty(m); work_n = np.empty(n)
    zn_arr = np.empty(m); un_arr = np.empty(m); fvp_arr = np.empty(m)
    t_arr = np.zeros(m); mdv_arr = np.empty(m)
    cdef double[::1] wm = work_m
    cdef double[::1] wn = work_n
    cdef double[::1] z_new = zn_arr
    cdef double[::1] u_new = un_arr
    cdef double[::1] fv_prev = fvp_arr
    cdef double[::1] t = t_arr
    cdef double[::1] mdv = mdv_arr

    cdef double guard2 = guard * guard
    cdef long status = MAX_ITER
    cdef long niter = max_iter
    cdef double beta = 1.0
    cdef double res_prev = np.inf
    cdef Py_ssize_t i, j, k
    cdef double ti, rn, sn, fvn, fvi, acc, eps_k, dlt_k, res
    cdef double beta_next, alpha_k, dvn, dun

    for i in range(m):
        fv_prev[i] = u[i] - z[i]

    for k in range(max_iter):
        for i in range(m):
            wm[i] = zh[i] + uh[i] - c[i]
        _matvec(At, wm, wn, n, m)
        for i in range(n):
            wn[i] = -(q[i] + rho * wn[i])
        _matvec(Kinv, wn, x, n, n)
        rn = 0.0
        fvn = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * x[j]
            ti = one * (acc - c[i]) - (1.0 - one) * zh[i] + uh[i]
            t[i] = ti
            if -ti > 0.0:
                z_new[i] = -ti
            else:
                z_new[i] = 0.0
            u_new[i] = ti + z_new[i]
            acc = acc + z_new[i] - c[i]
            rn += acc * acc
            fvi = (u_new[i] - z_new[i]) - fv_prev[i]
            fvn += fvi * fvi
        rn = sqrt(rn)
        fvn = sqrt(fvn)
        for i in range(m):
            wm[i] = z_new[i] - z[i]
        _matvec(At, wm, wn, n, m)
        for i in range(n):
            wn[i] = rho * wn[i]
        sn = _nrm2(wn, n)
        r_hist[k] = rn
        s_hist[k] = sn
        fv_hist[k] = fvn
        if with_diag and fvn > _DIAG_FLOOR:
            for i in range(m):
                wm[i] = (z_new[i] + u_new[i]) - (z[i] + u[i])
            _matvec(M, wm, mdv, m, m)
            dvn = _nrm2(mdv, m)
            dun = 0.0
            for i in range(m):
                acc = u_new[i] - u[i]
                dun += acc * acc
            dun = sqrt(dun)
            eps_k = dvn / fvn
            dlt_k = dun / fvn
            eps_hist[k] = eps_k
            dlt_hist[k] = dlt_k
            zlb_hist[k] = eps_k - dlt_k if eps_k > dlt_k else dlt_k - eps_k
        res = rn if rn > sn else sn
        if pin_momentum:
            alpha_k = 1.0
            for i in range(m):
                zh[i] = z_new[i]
                uh[i] = u_new[i]
        elif restart and not res < res_prev:
            alpha_k = 1.0
            if reset_beta:
                beta = 1.0
            for i in range(m):
                zh[i] = z_new[i]
                uh[i] = u_new[i]
        else:
            beta_next = (1.0 + sqrt(1.0 + 4.0 * beta * beta)) / 2.0
            alpha_k = 1.0 + (beta - 1.0) / beta_next
            beta = beta_next
            for i in range(m):
                zh[i] = alpha_k * z_new[i] + (1.0 - alpha_k) * z[i]
                uh[i] = alpha_k * u_new[i] + (1.0 - alpha_k) * u[i]
        a_hist[k] = alpha_k
        b_hist[k] = beta
        for i in range(m):
            fv_prev[i] = u_new[i] - z_new[i]
            z[i] = z_new[i]
            u[i] = u_new[i]
        res_prev = res
        if record:
            Xv[k + 1, :] = x; Zv[k + 1, :] = z; Uv[k + 1, :] = u
        if res <= tol:
            status = CONVERGED
            niter = k + 1
            break
        acc = 0.0
        for i in range(n):
            acc += x[i] * x[i]
        for i in range(m):
            acc += z[i] * z[i] + u[i] * u[i]
        if acc > guard2:
            status = DIVERGED
            niter = k + 1
            break

    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             U[:niter + 1].copy()) if record else None
    return (niter, status, r_arr[:niter].copy(), s_arr[:niter].copy(),
            fv_arr[:niter].copy(), eps_arr[:niter].copy(),
            dlt_arr[:niter].copy(), zlb_arr[:niter].copy(),
            a_arr[:niter].copy(), b_arr[:niter].copy(),
            x_arr.copy(), z_arr.copy(), u_arr.copy(), t_arr.copy(), hists)


def l2_loop(double[:, ::1] Kinv, double[::1] q, double delta, double rho,
            double alpha, double[::1] z_star, double[::1] x_star,
            x0, z0, mu0, double stag_rel, double err_target, long max_iter,
            double guard, bint record):
    cdef Py_ssize_t n = q.shape[0]

    x_arr = np.array(x0, dtype=np.float64, copy=True)
    z_arr = np.array(z0, dtype=np.float64, copy=True)
    mu_arr = np.array(mu0, dtype=np.float64, copy=True)
    cdef double[::1] x = x_arr
    cdef double[::1] z = z_arr
    cdef double[::1] mu = mu_arr

    de_arr = np.empty(max_iter + 1); xe_arr = np.empty(max_iter + 1)
    cdef double[::1] dual_err = de_arr
    cdef double[::1] x_err = xe_arr

    X = Z = MU = None
    cdef double[:, ::1] Xv = None, Zv = None, MUv = None
    if record:
        X = np.empty((max_iter + 1, n)); Z = np.empty((max_iter + 1, n))
        MU = np.empty((max_iter + 1, n))
        Xv = X; Zv = Z; MUv = MU
        Xv[0, :] = x; Zv[0, :] = z; MUv[0, :] = mu

    rhs_arr = np.empty(n); zn_arr = np.empty(n)
    cdef double[::1] rhs = rhs_arr
    cdef double[::1] z_new = zn_arr

    cdef long status = MAX_ITER
    cdef long niter = max_iter
    cdef Py_ssize_t i, k
    cdef double dz, e, zn, acc, zi

    acc = 0.0
    for i in range(n):
        zi = z[i] - z_star[i]
        acc += zi * zi
    dual_err[0] = sqrt(acc)
    acc = 0.0
    for i in range(n):
        zi = x[i] - x_star[i]
        acc += zi * zi
    x_err[0] = sqrt(acc)

    for k in range(max_iter):
        for i in range(n):
            rhs[i] = rho * z[i] - mu[i] - q[i]
        _matvec(Kinv, rhs, x, n, n)
        dz = 0.0
        zn = 0.0
        e = 0.0
        for i in range(n):
            z_new[i] = (mu[i] + rho * (alpha * x[i] + (1.0 - alpha) * z[i])) / (delta + rho)
            mu[i] = mu[i] + rho * (alpha * (x[i] - z_new[i]) + (1.0 - alpha) * (z[i] - z_new[i]))
            zi = z_new[i] - z[i]
            dz += zi * zi
            z[i] = z_new[i]
            zn += z[i] * z[i]
            zi = z[i] - z_star[i]
            e += zi * zi
        dz = sqrt(dz)
        zn = sqrt(zn)
        e = sqrt(e)
        dual_err[k + 1] = e
        acc = 0.0
        for i in range(n):
            zi = x[i] - x_star[i]
            acc += zi * zi
        x_err[k + 1] = sqrt(acc)
        if record:
            Xv[k + 1, :] = x; Zv[k + 1, :] = z; MUv[k + 1, :] = mu
        if err_target > 0.0 and e <= err_target:
            status = CONVERGED
            niter = k + 1
            break
        if dz <= stag_rel * (1.0 if zn < 1.0 else zn):
            status = STAGNATED
            niter = k + 1
            break
        if e > guard:
            status = DIVERGED
            niter = k + 1
            break

    hists = (X[:niter + 1].copy(), Z[:niter + 1].copy(),
             MU[:niter + 1].copy()) if record else None
    return (niter, status, de_arr[:niter + 1].copy(),
            xe_arr[:niter + 1].copy(), x_arr.copy(), z_arr.copy(),
            mu_arr.copy(), hists)
