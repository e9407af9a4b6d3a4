"""Minimum-norm interpolation and regularized fitting in sequence spaces.

Finite-support sequences in l1, lp (1 < p < inf) and l2 are sampled by a
finite family of sparse functionals.  The package solves the interpolation
problem ``min ||x|| s.t. L x = y`` and the regularized problem
``min Q(L x) + lam * phi(||x||)`` through fixed-point characterizations,
and cross-checks the l1 case against a dense simplex method.

Setting ``BANACH_MNI_DISABLE_JIT=1`` before import runs every hot loop as
plain NumPy/Python instead of numba-compiled code.
"""

__version__ = "0.1.0"

from ._jit import DISABLE_ENV, JIT_ENABLED
from .exceptions import *  # noqa: F401,F403
from .sequence import HILBERT, L1, LINF, SparseSeq, Space, combine, inner, lp, norm
from .sampling import SamplingOperator, apply_L, apply_Lstar, gram_matrix
from .duality import (
    dmap_lq,
    l1_subdiff_membership,
    linf_face,
    linf_subdiff_membership,
    max_index_mask,
    truncate_S,
)
from .prox import (
    LossSpec,
    prox_conjugate_via_moreau,
    prox_eps_insensitive,
    prox_hinge,
    prox_indicator_conj,
    prox_square,
    prox_vector_loss,
    prox_vector_loss_conj,
    soft_threshold,
)
from .report import CheckReport, IterationConfig, SolveReport, dumps17
from .lp_oracle import basis_pursuit, dual_inf_norm_lp, reconstruct_from_dual, simplex_solve
from .mni import (
    fixed_point_residual_l1,
    infimum_report,
    solve_mni,
    solve_mni_hilbert,
    solve_mni_l1,
    solve_mni_lp_space,
)
from .regularization import (
    RegProblem,
    Regularizer,
    check_mni_reg_link,
    reg_objective,
    solve_reg,
)
from .io import ProblemInstance, dump_problem, load_problem, parse_problem
from .verification import make_instances, run_suite
