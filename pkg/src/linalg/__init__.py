"""Sparse and dense linear algebra kernels."""

from src.linalg.dense import chol_factor, chol_solve, chol_solve_factored
from src.linalg.iterative import (
    IterativeResult,
    Operator,
    gmres_solve,
    ilu_preconditioner,
    jacobi_preconditioner,
    min_eig_estimate,
    op_norm_estimate,
    pcg_solve,
    spectral_radius_bound,
)
from src.linalg.sparse import (
    canonical,
    csr_from_triplets,
    gram_small,
    matvec,
    matvec_t,
    principal_submatrix,
    scale_rows,
    select_rows,
    sparse_direct_solve,
    stack_rows,
)

__all__ = [
    "IterativeResult",
    "Operator",
    "canonical",
    "chol_factor",
    "chol_solve",
    "chol_solve_factored",
    "csr_from_triplets",
    "gmres_solve",
    "gram_small",
    "ilu_preconditioner",
    "jacobi_preconditioner",
    "matvec",
    "matvec_t",
    "min_eig_estimate",
    "op_norm_estimate",
    "pcg_solve",
    "principal_submatrix",
    "scale_rows",
    "select_rows",
    "sparse_direct_solve",
    "spectral_radius_bound",
    "stack_rows",
]
