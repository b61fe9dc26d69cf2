"""Smooth parts used by the built-in problems."""

from typing import Tuple, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from src.core.exceptions import ConstructionError, DimensionMismatchError
from src.problems.base import CurvatureInfo, SmoothPart

# Dense least-squares terms above this dimension keep A^T A matrix-free
GRAM_ASSEMBLY_LIMIT = 4000

MatrixLike = Union[np.ndarray, sp.spmatrix]


class GramOperator(spla.LinearOperator):
    """Matrix-free A^T A for a dense A, with its diagonal precomputed."""

    def __init__(self, A: np.ndarray):
        super().__init__(dtype=np.float64, shape=(A.shape[1], A.shape[1]))
        self.A = A
        self.diag = np.einsum("ij,ij->j", A, A)

    def _matvec(self, v: np.ndarray) -> np.ndarray:
        return self.A.T @ (self.A @ np.ravel(v))

    def _adjoint(self) -> "GramOperator":
        return self


class QuadraticSmooth(SmoothPart):
    """f(x) = 1/2 x^T H x - b^T x + const with a fixed symmetric H."""

    def __init__(self, H: sp.spmatrix, b: np.ndarray, const: float = 0.0, spd_guaranteed: bool = True):
        H = sp.csr_matrix(H, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if H.shape[0] != H.shape[1] or b.shape != (H.shape[0],):
            raise DimensionMismatchError(f"H {H.shape} and b {b.shape} do not conform")
        super().__init__(H.shape[0])
        self.H = H
        self.b = b
        self.const = float(const)
        self.spd_guaranteed = spd_guaranteed

    @classmethod
    def distance_to(cls, target: np.ndarray) -> "QuadraticSmooth":
        """f(x) = 1/2 ||x - target||^2."""
        target = np.asarray(target, dtype=np.float64)
        n = target.shape[0]
        return cls(sp.identity(n, format="csr"), target, 0.5 * float(target @ target))

    def value(self, x: np.ndarray) -> float:
        return float(0.5 * x @ (self.H @ x) - self.b @ x + self.const)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.H @ x) - self.b

    def curvature(self, x: np.ndarray) -> CurvatureInfo:
        return CurvatureInfo(matrix=self.H, spd_guaranteed=self.spd_guaranteed)

    @property
    def is_quadratic(self) -> bool:
        return True

    def quadratic_form(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        return self.H, self.b


class LeastSquaresSmooth(SmoothPart):
    """f(x) = 1/2 ||A x - y||^2."""

    def __init__(self, A: MatrixLike, y: np.ndarray):
        y = np.asarray(y, dtype=np.float64)
        if A.shape[0] != y.shape[0]:
            raise DimensionMismatchError(f"A has {A.shape[0]} rows, y has length {y.shape[0]}")
        super().__init__(A.shape[1])
        self.A = sp.csr_matrix(A, dtype=np.float64) if sp.issparse(A) else np.asarray(A, dtype=np.float64)
        self.y = y
        self._curvature = self._build_curvature()

    def _build_curvature(self) -> CurvatureInfo:
        if sp.issparse(self.A) or self.dim <= GRAM_ASSEMBLY_LIMIT:
            gram = self.A.T @ self.A
            return CurvatureInfo(matrix=sp.csr_matrix(gram), spd_guaranteed=True)
        return CurvatureInfo(operator=GramOperator(self.A), spd_guaranteed=True)

    def value(self, x: np.ndarray) -> float:
        r = np.asarray(self.A @ x) - self.y
        return float(0.5 * r @ r)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.A.T @ (np.asarray(self.A @ x) - self.y))

    def curvature(self, x: np.ndarray) -> CurvatureInfo:
        return self._curvature

    @property
    def is_quadratic(self) -> bool:
        return True

    def quadratic_form(self) -> Tuple[sp.csr_matrix, np.ndarray]:
        return sp.csr_matrix(self.A.T @ self.A), np.asarray(self.A.T @ self.y)


class CauchySmooth(SmoothPart):
    """Cauchy data fidelity f(u) = sum_i log(a + (u_i - f_i)^2); nonconvex."""

    def __init__(self, f_obs: np.ndarray, a: float):
        if a <= 0:
            raise ConstructionError(f"Cauchy scale a must be positive, got {a}")
        f_obs = np.asarray(f_obs, dtype=np.float64)
        super().__init__(f_obs.shape[0])
        self.f_obs = f_obs
        self.a = float(a)

    def value(self, x: np.ndarray) -> float:
        r = x - self.f_obs
        return float(np.sum(np.log(self.a + r * r)))

    def gradient(self, x: np.ndarray) -> np.ndarray:
        r = x - self.f_obs
        return 2.0 * r / (self.a + r * r)

    def curvature(self, x: np.ndarray) -> CurvatureInfo:
        r2 = (x - self.f_obs) ** 2
        return CurvatureInfo(diagonal=2.0 * (self.a - r2) / (self.a + r2) ** 2, spd_guaranteed=False)
