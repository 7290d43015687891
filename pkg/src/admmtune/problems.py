"""Problem containers shared by the solver modules."""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg, matio


@dataclass(frozen=True)
class QuadCost:
    """Strictly convex quadratic objective 0.5 x'Qx + q'x."""

    Q: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        Q = linalg.check_symmetric(self.Q, name="Q")
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if q.shape[0] != Q.shape[0]:
            raise ValueError(f"q has length {q.shape[0]}, expected {Q.shape[0]}")
        if not np.all(np.isfinite(q)):
            raise ValueError("q has non-finite entries")
        if not linalg.is_positive_definite(Q):
            raise ValueError("Q must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)

    @property
    def n(self):
        return self.Q.shape[0]


@dataclass(frozen=True)
class L2Problem:
    """Quadratic cost plus a quadratic penalty of weight ``delta`` on the
    consensus copy of the variable.

    ``weight`` optionally carries the positive definite matrix of the
    generalized penalty; see :func:`admmtune.l2reg.weighted_transform` for
    reducing that form to this one.
    """

    cost: QuadCost
    delta: float
    weight: np.ndarray | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.weight is not None:
            W = linalg.check_symmetric(self.weight, name="weight")
            if not linalg.is_positive_definite(W):
                raise ValueError("weight must be positive definite")
            object.__setattr__(self, "weight", W)

    @property
    def Q(self):
        return self.cost.Q

    @property
    def q(self):
        return self.cost.q

    @property
    def n(self):
        return self.cost.n


@dataclass
class QpProblem:
    """Inequality-constrained QP: minimize the cost subject to A x <= c.

    A must have full rank in at least one direction; this is checked
    lazily, the first time the rank case is needed.  Feasibility is not
    required (and not checked) at construction.
    """

    cost: QuadCost
    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if A.ndim != 2:
            raise ValueError("A must be 2-D")
        if A.shape[1] != self.cost.n:
            raise ValueError(f"A has {A.shape[1]} columns, expected {self.cost.n}")
        if c.shape[0] != A.shape[0]:
            raise ValueError(f"c has length {c.shape[0]}, expected {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(c))):
            raise ValueError("A or c has non-finite entries")
        self.A = A
        self.c = c

    @property
    def Q(self):
        return self.cost.Q

    @property
    def q(self):
        return self.cost.q

    @property
    def n(self):
        return self.cost.n

    @property
    def m(self):
        return self.A.shape[0]

    @cached_property
    def splitting(self) -> linalg.ProjectorPair:
        """Rank case and residual-splitting maps for A (computed once)."""
        return linalg.projectors(self.A)

    @property
    def rank_case(self):
        return self.splitting.case


def load_l2(q_matrix_path, q_vector_path, delta_path):
    """Read an L2Problem from matrix-text files plus a scalar file."""
    Q = matio.read_matrix(q_matrix_path)
    q = matio.read_vector(q_vector_path)
    return L2Problem(QuadCost(Q, q), matio.read_scalar(delta_path))


def load_qp(q_matrix_path, q_vector_path, a_path, c_path):
    """Read a QpProblem from matrix-text files."""
    return QpProblem(QuadCost(matio.read_matrix(q_matrix_path),
                              matio.read_vector(q_vector_path)),
                     matio.read_matrix(a_path), matio.read_vector(c_path))


def save_qp(problem, q_matrix_path, q_vector_path, a_path, c_path):
    matio.write_matrix(q_matrix_path, problem.Q)
    matio.write_vector(q_vector_path, problem.q)
    matio.write_matrix(a_path, problem.A)
    matio.write_vector(c_path, problem.c)
