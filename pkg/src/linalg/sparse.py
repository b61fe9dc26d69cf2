"""Row-compressed sparse matrix kernels.

Every penalty operator, Laplacian and incidence matrix in the package is a
canonical ``scipy.sparse.csr_matrix``: rows sorted by column index, duplicates
summed, explicit zeros removed.
"""

from typing import Iterable, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.core.exceptions import ConstructionError, DimensionMismatchError, NotPositiveDefiniteError

Triplet = Tuple[int, int, float]


def canonical(M: sp.spmatrix) -> sp.csr_matrix:
    """Return M as a canonical CSR matrix (summed duplicates, no zeros, sorted rows)."""
    C = sp.csr_matrix(M, dtype=np.float64, copy=True)
    C.sum_duplicates()
    C.eliminate_zeros()
    C.sort_indices()
    return C


def csr_from_triplets(triplets: Iterable[Triplet], nrows: int, ncols: int) -> sp.csr_matrix:
    """Build a CSR matrix from (row, col, value) triplets.

    Args:
        triplets: Entries; duplicates are summed
        nrows: Number of rows
        ncols: Number of columns

    Returns:
        Canonical CSR matrix of shape (nrows, ncols)

    Raises:
        ConstructionError: If an index lies outside the shape
    """
    entries = list(triplets)
    if entries:
        rows, cols, vals = (np.asarray(v) for v in zip(*entries))
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0)
    rows = rows.astype(np.int64)
    cols = cols.astype(np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= nrows):
        raise ConstructionError(f"row index out of range for {nrows} rows")
    if cols.size and (cols.min() < 0 or cols.max() >= ncols):
        raise ConstructionError(f"column index out of range for {ncols} columns")
    coo = sp.coo_matrix((vals.astype(np.float64), (rows, cols)), shape=(nrows, ncols))
    return canonical(coo)


def matvec(M: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    """Compute M @ x."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (M.shape[1],):
        raise DimensionMismatchError(f"matvec: matrix has {M.shape[1]} columns, vector has shape {x.shape}")
    return np.asarray(M @ x, dtype=np.float64)


def matvec_t(M: sp.spmatrix, y: np.ndarray) -> np.ndarray:
    """Compute M.T @ y."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (M.shape[0],):
        raise DimensionMismatchError(f"matvec_t: matrix has {M.shape[0]} rows, vector has shape {y.shape}")
    return np.asarray(M.T @ y, dtype=np.float64)


def select_rows(M: sp.csr_matrix, idx: Sequence[int]) -> sp.csr_matrix:
    """Return the rows of M listed in idx, in that order."""
    idx = np.asarray(idx, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= M.shape[0]):
        raise ConstructionError(f"row selection out of range for {M.shape[0]} rows")
    if idx.size == 0:
        return sp.csr_matrix((0, M.shape[1]), dtype=np.float64)
    return sp.csr_matrix(M[idx, :])


def gram_small(M: sp.csr_matrix) -> np.ndarray:
    """Dense Gram matrix M @ M.T, exactly symmetric."""
    G = np.asarray((M @ M.T).toarray(), dtype=np.float64)
    return 0.5 * (G + G.T)


def scale_rows(M: sp.csr_matrix, weights: np.ndarray) -> sp.csr_matrix:
    """Multiply row i of M by weights[i]."""
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (M.shape[0],):
        raise DimensionMismatchError(f"{weights.shape[0]} row weights for {M.shape[0]} rows")
    return canonical(sp.diags(weights) @ M)


def stack_rows(blocks: Sequence[sp.spmatrix]) -> sp.csr_matrix:
    """Stack matrices with equal column count on top of each other."""
    blocks = [b for b in blocks if b.shape[0] > 0]
    if not blocks:
        raise ConstructionError("cannot stack an empty list of row blocks")
    return canonical(sp.vstack(blocks, format="csr"))


def principal_submatrix(M: sp.csr_matrix, idx: np.ndarray) -> sp.csr_matrix:
    """Rows and columns idx of a square matrix."""
    idx = np.asarray(idx, dtype=np.int64)
    return sp.csr_matrix(M[idx, :][:, idx])


def sparse_direct_solve(M: sp.spmatrix, b: np.ndarray) -> np.ndarray:
    """Solve M x = b with a sparse LU factorization.

    Raises:
        NotPositiveDefiniteError: If M is exactly singular
    """
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (M.shape[0],):
        raise DimensionMismatchError(f"right-hand side {b.shape} does not match matrix {M.shape}")
    if M.shape[0] == 0:
        return np.zeros(0)
    try:
        return spla.splu(sp.csc_matrix(M, dtype=np.float64)).solve(b)
    except RuntimeError as e:
        raise NotPositiveDefiniteError(f"sparse LU failed: {e}") from e
