"""Dense Cholesky factorization with an explicit pivot threshold."""

from typing import Tuple

import numpy as np
import scipy.linalg as sla

from src.core.exceptions import DimensionMismatchError, NotPositiveDefiniteError

PIVOT_REL_TOL = 1e-12

CholeskyFactor = Tuple[np.ndarray, bool]


def chol_factor(A: np.ndarray, pivot_rel_tol: float = PIVOT_REL_TOL) -> CholeskyFactor:
    """Factor a symmetric matrix as L L^T.

    Args:
        A: Dense symmetric matrix
        pivot_rel_tol: A squared pivot at or below pivot_rel_tol * max(diag(A)) is rejected

    Returns:
        Lower-triangular factor in scipy's (c, lower) form

    Raises:
        NotPositiveDefiniteError: If the factorization meets a non-positive or tiny pivot
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatchError(f"cholesky needs a square matrix, got {A.shape}")
    if A.shape[0] == 0:
        return np.zeros((0, 0)), True
    threshold = pivot_rel_tol * max(float(np.max(np.diag(A))), 0.0)
    try:
        L = sla.cholesky(A, lower=True, check_finite=True)
    except sla.LinAlgError as e:
        raise NotPositiveDefiniteError(f"cholesky failed: {e}") from e
    pivots = np.diag(L) ** 2
    bad = np.flatnonzero(pivots <= threshold)
    if bad.size:
        index = int(bad[0])
        raise NotPositiveDefiniteError(f"pivot {index} below {threshold:.3e}", pivot_index=index)
    return L, True


def chol_solve_factored(factor: CholeskyFactor, b: np.ndarray) -> np.ndarray:
    """Solve with a factor from chol_factor."""
    L, lower = factor
    if L.shape[0] == 0:
        return np.zeros(0)
    return sla.cho_solve((L, lower), np.asarray(b, dtype=np.float64), check_finite=False)


def chol_solve(A: np.ndarray, b: np.ndarray, pivot_rel_tol: float = PIVOT_REL_TOL) -> np.ndarray:
    """Solve A x = b for symmetric positive definite A."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (np.asarray(A).shape[0],):
        raise DimensionMismatchError(f"right-hand side {b.shape} does not match matrix {np.asarray(A).shape}")
    return chol_solve_factored(chol_factor(A, pivot_rel_tol), b)
