"""Dense symmetric linear algebra and fixed-point diagnostics.

Everything here is a pure function of its inputs.  The eigensolver is a
cyclic Jacobi iteration: dependency-free, deterministic across platforms,
and adequate for the desk-scale matrices (n up to a few hundred) this
package works with.
"""

from dataclasses import dataclass

import numpy as np

#: Relative threshold below which eigenvalues/singular values count as zero.
RANK_TOL = 1e-10

#: Off-diagonal Frobenius threshold (relative to ||S||_F) for Jacobi sweeps.
JACOBI_TOL = 1e-12

_MAX_SWEEPS = 60


def check_symmetric(S, rel_tol=1e-12, name="matrix"):
    """Validate a square symmetric array and return it as float64.

    Symmetry is required to within ``rel_tol`` relative to the largest
    entry; entries must be finite.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{name} must be square, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} has non-finite entries")
    scale = np.abs(S).max()
    if scale > 0 and np.abs(S - S.T).max() > rel_tol * scale:
        raise ValueError(f"{name} is not symmetric to within {rel_tol:g} relative")
    return S


@dataclass(frozen=True)
class EigenDecomp:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector onto a tagged subspace."""

    matrix: np.ndarray
    subspace: str


@dataclass(frozen=True)
class ProjectorPair:
    """Case-matched residual-splitting maps for a constraint matrix.

    ``r_map`` sends dual-residual vectors back to constraint space and
    ``null_proj`` projects onto the nullspace of the transposed matrix;
    ``case`` records which rank case applied.
    """

    r_map: np.ndarray
    null_proj: Projector
    case: str


def sym_eig(S, rel_tol=1e-12):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns an :class:`EigenDecomp` with eigenvalues sorted ascending by
    signed value and eigenvectors as the matching columns.  Sweeps stop
    once the off-diagonal Frobenius norm falls below
    ``JACOBI_TOL * ||S||_F``.
    """
    S = check_symmetric(S, rel_tol)
    n = S.shape[0]
    B = S.copy()
    V = np.eye(n)
    if n > 1:
        norm_s = np.linalg.norm(S)
        thresh = JACOBI_TOL * norm_s
        tiny = 1e-18 * max(norm_s, 1.0)
        offdiag = ~np.eye(n, dtype=bool)
        for _ in range(_MAX_SWEEPS):
            off = np.linalg.norm(B[offdiag])
            if off <= thresh or norm_s == 0.0:
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = B[p, q]
                    if abs(apq) <= tiny:
                        continue
                    theta = (B[q, q] - B[p, p]) / (2.0 * apq)
                    t = np.sign(theta) if theta != 0 else 1.0
                    t /= abs(theta) + np.sqrt(1.0 + theta * theta)
                    cth = 1.0 / np.sqrt(1.0 + t * t)
                    sth = t * cth
                    rp = B[p, :].copy(); rq = B[q, :].copy()
                    B[p, :] = cth * rp - sth * rq
                    B[q, :] = sth * rp + cth * rq
                    cp = B[:, p].copy(); cq = B[:, q].copy()
                    B[:, p] = cth * cp - sth * cq
                    B[:, q] = sth * cp + cth * cq
                    B[p, q] = 0.0
                    B[q, p] = 0.0
                    vp = V[:, p].copy(); vq = V[:, q].copy()
                    V[:, p] = cth * vp - sth * vq
                    V[:, q] = sth * vp + cth * vq
        else:
            raise RuntimeError("Jacobi sweeps did not converge")
    values = np.diag(B).copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomp(values=values[order], vectors=V[:, order])


def spectral_radius(S):
    """Largest eigenvalue modulus of a symmetric matrix."""
    return float(np.abs(sym_eig(S).values).max())


def chol_inv_factor(Q):
    """Factor R with ``R @ R.T`` equal to the inverse of a PD matrix Q.

    Raises ``ValueError`` when Q is not positive definite (a Cholesky
    pivot fails).
    """
    Q = check_symmetric(Q, name="Q")
    try:
        G = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise ValueError("Q is not positive definite (non-positive pivot)")
    return np.linalg.inv(G).T


def is_positive_definite(Q):
    try:
        np.linalg.cholesky(check_symmetric(Q))
    except (ValueError, np.linalg.LinAlgError):
        return False
    return True


def numeric_rank(gram_values, rank_tol=RANK_TOL):
    """Count of eigenvalues above ``rank_tol`` times the largest."""
    top = gram_values.max() if gram_values.size else 0.0
    if top <= 0.0:
        return 0
    return int(np.sum(gram_values > rank_tol * top))


def projectors(A, rank_tol=RANK_TOL):
    """Residual-splitting pair (R, nullspace projector) for A.

    The rank case is detected from the spectra of the two Gram matrices:

    - full column rank: ``R = A (A^T A)^{-1}``, projector onto the
      nullspace of ``A^T``;
    - full row rank: ``R = (A A^T)^{-1} A``, zero projector;
    - invertible: ``R = A^{-1}``, zero projector.

    A matrix that is rank deficient in both directions is rejected.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("A must be 2-D")
    m, n = A.shape
    gram_cols = A.T @ A
    gram_rows = A @ A.T
    rank = numeric_rank(sym_eig((gram_cols + gram_cols.T) / 2).values, rank_tol)
    if rank < min(m, n):
        raise ValueError(
            f"A ({m}x{n}) has numeric rank {rank}: rank deficient in both "
            "directions, no residual-splitting pair exists")
    zero = Projector(np.zeros((m, m)), "nullspace-of-At")
    if m == n:
        # inverse transpose: the square limit of the full-row-rank map,
        # which is what makes the residual split exact
        return ProjectorPair(np.linalg.inv(A).T, zero, "invertible")
    if rank == n:  # tall
        gram_inv = np.linalg.inv(gram_cols)
        pi_null = np.eye(m) - A @ gram_inv @ A.T
        return ProjectorPair(A @ gram_inv,
                             Projector(pi_null, "nullspace-of-At"),
                             "full-column")
    return ProjectorPair(np.linalg.inv(gram_rows) @ A, zero, "full-row")


def range_projector(V):
    """Orthogonal projector onto the column span of V."""
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    Qf, Rf = np.linalg.qr(V)
    keep = np.abs(np.diag(Rf)) > RANK_TOL * max(np.abs(np.diag(Rf)).max(), 1e-300)
    Qf = Qf[:, keep]
    return Qf @ Qf.T


@dataclass(frozen=True)
class FixedPointReport:
    converges: bool
    factor: float


def fixed_point_check(T, V, tol=1e-8):
    """Convergence test for the linear fixed-point iteration x <- T x.

    ``V`` must span the fixed subspace of the symmetric map T (``T V = V``
    to ``tol``).  The iteration converges to the projection of the start
    onto that subspace exactly when the returned factor, the spectral
    radius of T minus the projector onto span(V), is below one.
    """
    T = check_symmetric(T, name="T")
    V = np.asarray(V, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    resid = np.abs(T @ V - V).max()
    if resid > tol * max(1.0, np.abs(V).max()):
        raise ValueError("columns of V do not span a fixed subspace of T "
                         f"(|TV - V| = {resid:.3e})")
    pi = range_projector(V)
    factor = spectral_radius(T - pi)
    return FixedPointReport(converges=bool(factor < 1.0), factor=factor)
