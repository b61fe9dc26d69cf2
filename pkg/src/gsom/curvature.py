"""Huber smoothing of the penalty and the clamped second-order system.

The Huber function h_g(t) is g*t^2/2 on |t| <= 1/g and |t| - 1/(2g) outside.
Its second derivative on the penalty gives the weak Hessian
Gamma = g * C^T D C, where D masks the rows with |<c_i,x>| <= 1/g. The
direction system matrix is M = B^ + beta*Gamma with B^ the clamped curvature
of the smooth part.
"""

from functools import cached_property
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from src.core.exceptions import ConstructionError, DirectionError
from src.linalg.iterative import min_eig_estimate
from src.linalg.sparse import principal_submatrix, select_rows
from src.problems.base import CurvatureInfo
from src.utils.logger import get_logger

logger = get_logger(__name__)

ArrayOrFloat = Union[float, np.ndarray]


def huber_value(t: ArrayOrFloat, gamma: float) -> ArrayOrFloat:
    """Huber function of the absolute value, elementwise."""
    a = np.abs(t)
    value = np.where(a <= 1.0 / gamma, 0.5 * gamma * a * a, a - 0.5 / gamma)
    return float(value) if np.ndim(value) == 0 else value


def huber_grad_scalar(t: ArrayOrFloat, gamma: float) -> ArrayOrFloat:
    """Derivative t / max(1/gamma, |t|), elementwise; always in [-1, 1]."""
    grad = np.asarray(t, dtype=np.float64) / np.maximum(1.0 / gamma, np.abs(t))
    return float(grad) if np.ndim(grad) == 0 else grad


def huber_penalty_value(C: sp.csr_matrix, x: np.ndarray, gamma: float) -> float:
    """sum_i h_g(<c_i, x>)."""
    return float(np.sum(huber_value(np.asarray(C @ x), gamma)))


def huber_penalty_grad(C: sp.csr_matrix, x: np.ndarray, gamma: float) -> np.ndarray:
    """Gradient C^T [h_g'(<c_i, x>)]_i of the Huberized penalty."""
    return np.asarray(C.T @ huber_grad_scalar(np.asarray(C @ x), gamma))


class HuberOperator:
    """Weak Hessian Gamma = gamma * C^T D C frozen at the point it was built at.

    A gamma of 0 stands for the plain generalized gradient step: the mask is
    empty and Gamma vanishes.
    """

    def __init__(self, C: sp.csr_matrix, mask: np.ndarray, gamma: float):
        if mask.shape != (C.shape[0],):
            raise ConstructionError(f"mask has shape {mask.shape} for {C.shape[0]} rows")
        self.C = C
        self.mask = mask
        self.gamma = float(gamma)
        self._rows = np.flatnonzero(mask)

    @property
    def dim(self) -> int:
        return int(self.C.shape[1])

    @property
    def n_masked(self) -> int:
        return int(self._rows.size)

    @cached_property
    def masked_rows(self) -> sp.csr_matrix:
        return select_rows(self.C, self._rows)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Gamma v = gamma * C^T (D (C v))."""
        if self.n_masked == 0:
            return np.zeros(self.dim)
        CD = self.masked_rows
        return self.gamma * np.asarray(CD.T @ (CD @ v))

    def diagonal(self) -> np.ndarray:
        if self.n_masked == 0:
            return np.zeros(self.dim)
        CD = self.masked_rows
        return self.gamma * np.asarray(CD.multiply(CD).sum(axis=0)).reshape(-1)

    @cached_property
    def assembled(self) -> sp.csr_matrix:
        """Sparse symmetric gamma * C_D^T C_D, built on first use."""
        if self.n_masked == 0:
            return sp.csr_matrix((self.dim, self.dim), dtype=np.float64)
        CD = self.masked_rows
        G = sp.csr_matrix(self.gamma * (CD.T @ CD))
        return sp.csr_matrix(0.5 * (G + G.T))


def build_huber_operator(C: sp.csr_matrix, x: np.ndarray, gamma: float) -> HuberOperator:
    """Weak Hessian at x; rows with |<c_i,x>| <= 1/gamma are switched on."""
    if gamma < 0:
        raise ConstructionError(f"gamma must be non-negative, got {gamma}")
    if gamma == 0:
        return HuberOperator(C, np.zeros(C.shape[0], dtype=bool), 0.0)
    mask = np.abs(np.asarray(C @ x)) <= 1.0 / gamma
    return HuberOperator(C, mask, gamma)


def gershgorin_lower_bound(M: sp.csr_matrix) -> float:
    """min_i (m_ii - sum_{j != i} |m_ij|), a certified lower bound of lambda_min."""
    diag = M.diagonal()
    off = np.asarray(abs(M).sum(axis=1)).reshape(-1) - np.abs(diag)
    return float(np.min(diag - off, initial=np.inf)) if M.shape[0] else 0.0


class SystemOperator:
    """Symmetric positive definite M = B^ + beta*Gamma, optionally restricted to a coordinate subset.

    B^ is either a clamped diagonal, an explicit matrix plus a shift, or a
    matrix-free operator plus a shift. ``index`` restricts M to a principal
    submatrix; vectors passed to apply then live on that subset.
    """

    def __init__(
        self,
        curvature: CurvatureInfo,
        huber: HuberOperator,
        beta: float,
        shift: float = 0.0,
        clamped_diagonal: Optional[np.ndarray] = None,
        kappa_min: float = 0.0,
        index: Optional[np.ndarray] = None,
        parent: Optional["SystemOperator"] = None,
    ):
        self.curvature = curvature
        self.huber = huber
        self.beta = float(beta)
        self.shift = float(shift)
        self.clamped_diagonal = clamped_diagonal
        self.kappa_min = float(kappa_min)
        self.index = index
        self.parent = parent
        self.full_dim = huber.dim

    @property
    def dim(self) -> int:
        return self.full_dim if self.index is None else int(self.index.size)

    @property
    def can_assemble(self) -> bool:
        return self.curvature.operator is None

    def _apply_full(self, v: np.ndarray) -> np.ndarray:
        if self.clamped_diagonal is not None:
            out = self.clamped_diagonal * v
        else:
            out = self.curvature.apply(v) + self.shift * v
        if self.beta > 0:
            out = out + self.beta * self.huber.apply(v)
        return out

    def apply(self, v: np.ndarray) -> np.ndarray:
        """M v."""
        if self.index is None:
            return self._apply_full(v)
        full = np.zeros(self.full_dim)
        full[self.index] = v
        return self._apply_full(full)[self.index]

    def diagonal(self) -> np.ndarray:
        if self.clamped_diagonal is not None:
            diag = self.clamped_diagonal.copy()
        else:
            diag = self.curvature.diag() + self.shift
        if self.beta > 0:
            diag = diag + self.beta * self.huber.diagonal()
        return diag if self.index is None else diag[self.index]

    @cached_property
    def assembled(self) -> sp.csr_matrix:
        """Assembled sparse M (restricted when an index is set).

        Raises:
            DirectionError: If the smooth curvature is only available matrix-free
        """
        if not self.can_assemble:
            raise DirectionError("matrix-free curvature has no assembled system matrix")
        if self.parent is not None:
            return principal_submatrix(self.parent.assembled, self.index)
        if self.clamped_diagonal is not None:
            B = sp.diags(self.clamped_diagonal, format="csr")
        else:
            B = self.curvature.matrix + self.shift * sp.identity(self.full_dim, format="csr")
        M = sp.csr_matrix(B + self.beta * self.huber.assembled) if self.beta > 0 else sp.csr_matrix(B)
        return M if self.index is None else principal_submatrix(M, self.index)

    def principal(self, index: np.ndarray) -> "SystemOperator":
        """Principal subsystem on the given coordinates; shares the assembled full matrix."""
        full = self if self.parent is None else self.parent
        if self.index is not None:
            index = self.index[index]
        return SystemOperator(
            self.curvature,
            self.huber,
            self.beta,
            shift=self.shift,
            clamped_diagonal=self.clamped_diagonal,
            kappa_min=self.kappa_min,
            index=np.asarray(index, dtype=np.int64),
            parent=full,
        )


def default_kappa_min(curvature: CurvatureInfo) -> float:
    """Curvature floor 1e-6 * (1 + trace(B)/m)."""
    return 1e-6 * (1.0 + abs(curvature.mean_trace()))


def assemble_system(
    B: CurvatureInfo,
    huber: HuberOperator,
    beta: float,
    kappa_min: float,
    min_eig: Optional[float] = None,
    seed: int = 0,
) -> SystemOperator:
    """Clamp the smooth curvature to kappa_min and add the Huber term.

    Diagonal curvature is clamped entrywise. Explicit and matrix-free curvature
    is shifted by delta = max(0, kappa_min - lambda_min). For curvature flagged
    positive semidefinite lambda_min is bounded below by Gershgorin (and by 0);
    otherwise it is estimated by shifted power iteration unless ``min_eig``
    supplies it.

    Args:
        B: Curvature of the smooth part
        huber: Weak Hessian at the same point
        beta: Penalty weight
        kappa_min: Curvature floor, > 0
        min_eig: Known smallest eigenvalue of B, skips the estimate
        seed: Seed of the power iteration

    Returns:
        SystemOperator with v^T M v >= kappa_min ||v||^2
    """
    if kappa_min <= 0:
        raise ConstructionError(f"kappa_min must be positive, got {kappa_min}")
    if B.dim != huber.dim:
        raise ConstructionError(f"curvature dimension {B.dim} does not match penalty dimension {huber.dim}")

    if B.diagonal is not None:
        clamped = np.maximum(B.diagonal, kappa_min)
        n_clamped = int(np.count_nonzero(B.diagonal < kappa_min))
        if n_clamped:
            logger.debug(f"Clamped {n_clamped} of {B.dim} diagonal curvature entries to {kappa_min:.3e}")
        return SystemOperator(B, huber, beta, clamped_diagonal=clamped, kappa_min=kappa_min)

    if min_eig is None:
        if B.spd_guaranteed:
            lower = gershgorin_lower_bound(B.matrix) if B.matrix is not None else 0.0
            min_eig = max(lower, 0.0)
        else:
            min_eig = min_eig_estimate(B.apply, B.dim, seed=seed)
    shift = max(0.0, kappa_min - min_eig)
    if shift > 0:
        logger.debug(f"Shifted curvature by {shift:.3e} (lambda_min estimate {min_eig:.3e})")
    return SystemOperator(B, huber, beta, shift=shift, kappa_min=kappa_min)
