import numpy as np
import pytest

from admmtune._kernels import pykern
from admmtune.generators import qp_instance, qp_known_gram_spectrum
from admmtune.problems import L2Problem, QuadCost
from admmtune.qp import cached_system_inverse, default_init

try:
    from admmtune._kernels import ckern
except ImportError:
    ckern = None

needs_compiled = pytest.mark.skipif(ckern is None,
                                    reason="compiled kernels not built")


def qp_setup(seed=0, n=8, m=4, rho=1.0):
    eigs = np.exp(np.linspace(-0.5, 0.8, m))
    Q, A = qp_known_gram_spectrum(n, m, eigs, seed)
    prob = qp_instance(Q, A, seed + 1)
    A = np.ascontiguousarray(prob.A)
    Kinv = cached_system_inverse(prob.Q, A, rho)
    M = np.ascontiguousarray(rho * (A @ Kinv @ A.T))
    return prob, Kinv, A, np.ascontiguousarray(A.T), M


def run_qp(kern, prob, Kinv, A, At, M, rho=1.0, alpha=1.0, iters=40):
    x0, z0, u0 = default_init(prob)
    return kern.qp_loop(Kinv, A, At, M, prob.q, prob.c, rho, alpha,
                        x0, z0, u0, 0.0, iters, 1e12, True)


class TestPythonKernelInternals:
    def test_deterministic_repeat(self):
        prob, Kinv, A, At, M = qp_setup()
        a = run_qp(pykern, prob, Kinv, A, At, M)
        b = run_qp(pykern, prob, Kinv, A, At, M)
        assert np.array_equal(a[2], b[2])
        assert np.array_equal(a[8], b[8])

    def test_trimmed_lengths(self):
        prob, Kinv, A, At, M = qp_setup()
        x0, z0, u0 = default_init(prob)
        out = pykern.qp_loop(Kinv, A, At, M, prob.q, prob.c, 1.0, 1.0,
                             x0, z0, u0, 1e-7, 10_000, 1e12, True)
        niter = out[0]
        assert out[1] == pykern.CONVERGED
        assert all(arr.shape[0] == niter for arr in out[2:8])
        assert out[12][0].shape == (niter + 1, prob.n)


@needs_compiled
class TestBackendParity:
    def test_qp_short_run_close(self):
        # identical math, different summation order: expect agreement to
        # rounding over a short horizon
        prob, Kinv, A, At, M = qp_setup()
        py = run_qp(pykern, prob, Kinv, A, At, M, iters=25)
        cy = run_qp(ckern, prob, Kinv, A, At, M, iters=25)
        np.testing.assert_allclose(py[8], cy[8], rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(py[2], cy[2], rtol=1e-9, atol=1e-11)
        np.testing.assert_allclose(py[4], cy[4], rtol=1e-9, atol=1e-11)

    def test_qp_full_solve_same_optimum(self):
        prob, Kinv, A, At, M = qp_setup(seed=5)
        x0, z0, u0 = default_init(prob)
        args = (Kinv, A, At, M, prob.q, prob.c, 1.0, 1.0, x0, z0, u0,
                1e-9, 100_000, 1e12, False)
        out_py = pykern.qp_loop(*args)
        out_cy = ckern.qp_loop(*args)
        assert out_py[1] == out_cy[1] == pykern.CONVERGED
        np.testing.assert_allclose(out_py[8], out_cy[8], atol=1e-7)

    def test_relaxed_and_diagnostics_parity(self):
        prob, Kinv, A, At, M = qp_setup(seed=6)
        py = run_qp(pykern, prob, Kinv, A, At, M, alpha=1.8, iters=30)
        cy = run_qp(ckern, prob, Kinv, A, At, M, alpha=1.8, iters=30)
        # ratios lose meaning once the denominators sit at the float floor
        keep = py[4] > 1e-9
        for idx in (5, 6, 7):  # eps, delta, zeta_lb series
            np.testing.assert_allclose(py[idx][keep], cy[idx][keep],
                                       rtol=1e-8, atol=1e-10, equal_nan=True)

    def test_fast_parity(self):
        prob, Kinv, A, At, M = qp_setup(seed=7)
        x0, z0, u0 = default_init(prob)
        args = (Kinv, A, At, M, prob.q, prob.c, 1.0, x0, z0, u0,
                0.0, 30, 1e12, True, True, False, False)
        py = pykern.fast_loop(*args)
        cy = ckern.fast_loop(*args)
        np.testing.assert_allclose(py[10], cy[10], rtol=1e-9, atol=1e-11)
        np.testing.assert_array_equal(py[8] > 1.0, cy[8] > 1.0)

    def test_l2_parity(self):
        rng = np.random.default_rng(8)
        G = rng.standard_normal((6, 6))
        Q = G @ G.T + 3 * np.eye(6)
        q = rng.standard_normal(6)
        delta, rho = 0.7, 1.3
        Kinv = np.ascontiguousarray(np.linalg.inv(Q + rho * np.eye(6)))
        z_star = np.linalg.solve(Q + delta * np.eye(6), -q)
        zeros = np.zeros(6)
        args = (Kinv, q, delta, rho, 1.0, z_star, z_star, zeros, zeros,
                zeros, 1e-14, 0.0, 200, 1e12, False)
        py = pykern.l2_loop(*args)
        cy = ckern.l2_loop(*args)
        assert py[0] == cy[0]
        np.testing.assert_allclose(py[2], cy[2], rtol=1e-9, atol=1e-13)
