"""Seeded random problem generators used by the benchmark harness and the
test suite.  Everything is driven by explicit generators or seeds; no
global RNG state."""

import numpy as np

from .problems import L2Problem, QpProblem, QuadCost


def _rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def random_spd(n, lam_min, lam_max, seed, spectrum=None):
    """Random SPD matrix with prescribed extreme eigenvalues.

    Interior eigenvalues are log-uniform unless ``spectrum`` is given.
    Returns the matrix and its (sorted) spectrum.
    """
    rng = _rng(seed)
    if spectrum is None:
        lams = np.exp(rng.uniform(np.log(lam_min), np.log(lam_max), n))
        lams[0], lams[-1] = lam_min, lam_max
    else:
        lams = np.asarray(spectrum, dtype=float)
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Q = (V * lams) @ V.T
    return (Q + Q.T) / 2, np.sort(lams)


def random_l2(n, delta, lam_min=1.0, lam_max=10.0, seed=0):
    """Random regularized problem; also returns the spectrum of Q."""
    rng = _rng(seed)
    Q, lams = random_spd(n, lam_min, lam_max, rng)
    q = rng.standard_normal(n)
    return L2Problem(QuadCost(Q, q), delta), lams


def qp_known_gram_spectrum(n, m, gram_eigs, seed):
    """QP data whose constraint Gram matrix has a prescribed spectrum.

    Builds A = diag(sqrt(eigs)) U' Q^{1/2} with U an orthonormal n-by-m
    frame, so the spectrum of A Q^{-1} A' is exactly ``gram_eigs``
    (requires m <= n).  Returns (Q, A) for pairing with sampled (q, c).
    """
    if m > n:
        raise ValueError("need m <= n for an exact prescribed spectrum")
    rng = _rng(seed)
    gram_eigs = np.asarray(gram_eigs, dtype=float)
    Q, _ = random_spd(n, 1.0, 20.0, rng)
    w, V = np.linalg.eigh(Q)
    Q_half = (V * np.sqrt(w)) @ V.T
    U, _ = np.linalg.qr(rng.standard_normal((n, m)))
    A = (np.sqrt(gram_eigs)[:, None] * U.T) @ Q_half
    return Q, A


def qp_instance(Q, A, seed, slack_lo=-0.5, slack_hi=0.5):
    """Pair shared (Q, A) with a sampled linear term and offsets.

    Offsets are placed around the unconstrained optimizer so roughly the
    constraints with negative slack draws end up active.
    """
    rng = _rng(seed)
    n = Q.shape[0]
    x_free = rng.standard_normal(n)
    q = -(Q @ x_free)
    c = A @ x_free + rng.uniform(slack_lo, slack_hi, A.shape[0])
    return QpProblem(QuadCost(Q, q), A, c)


def qp_all_inactive(n, seed, lam_min=1.0, lam_max=10.0, margin=(3.0, 6.0)):
    """Box-constrained QP whose constraints are all slack at the optimum."""
    rng = _rng(seed)
    Q, _ = random_spd(n, lam_min, lam_max, rng)
    x_free = rng.standard_normal(n)
    q = -(Q @ x_free)
    c = x_free + rng.uniform(*margin, n)
    return QpProblem(QuadCost(Q, q), np.eye(n), c)


def qp_all_active(n, seed, lam_min=1.0, lam_max=10.0, corner=-1.0):
    """Box QP with zero linear term and an all-negative corner, so every
    bound holds with equality at the optimum (multipliers all positive)."""
    rng = _rng(seed)
    Q, _ = random_spd(n, lam_min, lam_max, rng)
    return QpProblem(QuadCost(Q, np.zeros(n)), np.eye(n), np.full(n, corner))


def qp_infeasible():
    """Two contradictory bounds on one variable."""
    return QpProblem(QuadCost(np.eye(1), np.zeros(1)),
                     np.array([[1.0], [-1.0]]), np.array([-1.0, -2.0]))
