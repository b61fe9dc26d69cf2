"""Problem abstraction: a smooth part f paired with a penalty beta*||Cx||_1."""

from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.constants import ProblemKind
from src.core.exceptions import (
    ConstructionError,
    DimensionMismatchError,
    EvaluationError,
    NonQuadraticSmoothPartError,
)
from src.linalg.sparse import canonical, scale_rows


class CurvatureInfo(BaseModel):
    """Second-order information B of the smooth part at a point.

    Exactly one of ``matrix`` (explicit sparse symmetric), ``diagonal`` or
    ``operator`` (matrix-free, used for large dense least-squares terms) is set.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    matrix: Optional[sp.csr_matrix] = Field(default=None, description="Explicit symmetric matrix")
    diagonal: Optional[np.ndarray] = Field(default=None, description="Diagonal curvature")
    operator: Optional[spla.LinearOperator] = Field(default=None, description="Matrix-free symmetric operator")
    spd_guaranteed: bool = Field(description="True when B is known to be positive semidefinite")

    @model_validator(mode="after")
    def _one_form(self) -> "CurvatureInfo":
        forms = [self.matrix is not None, self.diagonal is not None, self.operator is not None]
        if sum(forms) != 1:
            raise ValueError("exactly one of matrix, diagonal or operator must be given")
        if self.spd_guaranteed and self.diagonal is not None and np.min(self.diagonal, initial=0.0) < 0:
            raise ValueError("spd_guaranteed diagonal curvature has a negative entry")
        return self

    @property
    def dim(self) -> int:
        if self.diagonal is not None:
            return int(self.diagonal.shape[0])
        if self.matrix is not None:
            return int(self.matrix.shape[0])
        return int(self.operator.shape[0])

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Compute B v."""
        if self.diagonal is not None:
            return self.diagonal * v
        if self.matrix is not None:
            return np.asarray(self.matrix @ v)
        return np.asarray(self.operator.matvec(v)).reshape(-1)

    def diag(self) -> np.ndarray:
        """Diagonal of B."""
        if self.diagonal is not None:
            return self.diagonal
        if self.matrix is not None:
            return self.matrix.diagonal()
        diag = getattr(self.operator, "diag", None)
        if diag is None:
            raise ConstructionError("matrix-free curvature does not expose its diagonal")
        return diag

    def mean_trace(self) -> float:
        """trace(B) / m."""
        return float(np.mean(self.diag())) if self.dim else 0.0


class SmoothPart(ABC):
    """Smooth, possibly nonconvex, part f of the composite objective."""

    def __init__(self, dim: int):
        self.dim = dim

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        """f(x)."""

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of f at x."""

    @abstractmethod
    def curvature(self, x: np.ndarray) -> CurvatureInfo:
        """Hessian (or approximation) of f at x."""

    @property
    def is_quadratic(self) -> bool:
        return False

    def quadratic_form(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        """Return (H, b) with f(x) = 1/2 x^T H x - b^T x + const.

        Raises:
            NonQuadraticSmoothPartError: If f is not quadratic
        """
        raise NonQuadraticSmoothPartError(f"{type(self).__name__} is not a quadratic smooth part")


class ProblemSpec(BaseModel):
    """Composite problem min f(x) + beta*||Cx||_1.

    Row weights are absorbed into C at construction, so ``C`` and ``beta`` are
    all downstream code ever needs.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Optional[ProblemKind] = Field(default=None, description="Problem family, None for ad-hoc problems")
    smooth: SmoothPart = Field(description="Smooth part f")
    C: sp.csr_matrix = Field(description="Penalty matrix with weights absorbed")
    beta: float = Field(ge=0.0, description="Penalty weight")
    meta: Dict[str, Any] = Field(default_factory=dict, description="Builder metadata (grid shape, ...)")

    @classmethod
    def create(
        cls,
        smooth: SmoothPart,
        C: sp.spmatrix,
        beta: float,
        row_weights: Optional[np.ndarray] = None,
        kind: Optional[ProblemKind] = None,
        meta: Optional[Dict[str, Any]] = None,
    ) -> "ProblemSpec":
        """Build a problem, scaling row i of C by row_weights[i].

        Raises:
            ConstructionError: For non-positive weights or a negative beta
            DimensionMismatchError: If C does not act on the smooth part's space
        """
        C = canonical(C)
        if C.shape[1] != smooth.dim:
            raise DimensionMismatchError(f"C has {C.shape[1]} columns, smooth part has dimension {smooth.dim}")
        if beta < 0 or not np.isfinite(beta):
            raise ConstructionError(f"beta must be a finite non-negative number, got {beta}")
        if row_weights is not None:
            w = np.asarray(row_weights, dtype=np.float64)
            if w.shape != (C.shape[0],):
                raise DimensionMismatchError(f"{w.shape} row weights for {C.shape[0]} rows")
            if np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ConstructionError("row weights must be strictly positive")
            C = scale_rows(C, w)
        return cls(kind=kind, smooth=smooth, C=C, beta=float(beta), meta=dict(meta or {}))

    @property
    def dim(self) -> int:
        return int(self.C.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.C.shape[0])


def eval_cost(p: ProblemSpec, x: np.ndarray) -> float:
    """phi(x) = f(x) + beta*||Cx||_1, the single cost formula of the package.

    Raises:
        EvaluationError: If f(x) is NaN or infinite
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (p.dim,):
        raise DimensionMismatchError(f"point has shape {x.shape}, problem dimension is {p.dim}")
    fx = p.smooth.value(x)
    if not np.isfinite(fx):
        raise EvaluationError(f"smooth part returned {fx}", x)
    return float(fx + p.beta * np.abs(p.C @ x).sum())
