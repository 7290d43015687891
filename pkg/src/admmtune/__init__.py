"""Tuned operator-splitting solvers for quadratic programs.

Two problem families: quadratic costs with a quadratic consensus penalty
(``l2reg``) and inequality-constrained QPs (``qp``), both with
closed-form optimal step-size selection, over-relaxation, diagonal
constraint preconditioning (``precond``), an accelerated baseline
(``fastadmm``), an MPC condenser for realistic batches (``mpc``), and a
benchmark CLI (``admmtune``).
"""

from ._kernels import backend_name
from .fastadmm import FastSolution, solve_fast
from .l2reg import (L2Trace, TuningReport, baseline_gradient,
                    baseline_heavy_ball, weighted_transform)
from .l2reg import error_matrix as l2_error_matrix
from .l2reg import factor as l2_factor
from .l2reg import relaxed_factor as relaxed_l2_factor
from .l2reg import solve as solve_l2
from .l2reg import tune as tune_l2_spectrum
from .l2reg import tune_problem as tune_l2
from .linalg import (EigenDecomp, chol_inv_factor, fixed_point_check,
                     projectors, sym_eig)
from .mpc import CondensedQp, MpcProblem, condense, generate_batch, normalize_rows
from .precond import ScalingResult, nonzero_eig_ratio, optimal_scaling
from .problems import L2Problem, QpProblem, QuadCost
from .qp import (QpSolution, QpSpectral, ResidualTrace, residual_identities_check,
                 theoretical_factor)
from .qp import iteration_matrix as compute_iteration_matrix
from .qp import solve as solve_qp
from .qp import spectral as qp_spectral
from .qp import tune as tune_qp
from .qp import tune_relaxed as tune_qp_relaxed

__version__ = "0.1.0"

__all__ = [
    "backend_name", "FastSolution", "solve_fast", "L2Trace", "TuningReport",
    "baseline_gradient", "baseline_heavy_ball", "weighted_transform",
    "l2_error_matrix", "l2_factor", "relaxed_l2_factor", "solve_l2",
    "tune_l2_spectrum", "tune_l2", "EigenDecomp", "chol_inv_factor",
    "fixed_point_check", "projectors", "sym_eig", "CondensedQp", "MpcProblem",
    "condense", "generate_batch", "normalize_rows", "ScalingResult",
    "nonzero_eig_ratio", "optimal_scaling", "L2Problem", "QpProblem",
    "QuadCost", "QpSolution", "QpSpectral", "ResidualTrace",
    "residual_identities_check", "theoretical_factor",
    "compute_iteration_matrix", "solve_qp", "qp_spectral", "tune_qp",
    "tune_qp_relaxed", "__version__",
]
