"""Krylov solvers, preconditioners and power-iteration spectrum estimates."""

from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field

from src.core.exceptions import DimensionMismatchError
from src.utils.logger import get_logger

logger = get_logger(__name__)

Operator = Callable[[np.ndarray], np.ndarray]


class IterativeResult(BaseModel):
    """Outcome of an iterative linear solve."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray = Field(description="Approximate solution")
    iters: int = Field(description="Iterations performed")
    converged: bool = Field(description="False flags NotConverged; the caller decides on a fallback")
    relative_residual: float = Field(description="||A x - b|| / ||b|| (0 for b = 0)")


def _identity(v: np.ndarray) -> np.ndarray:
    return v


def pcg_solve(
    apply_A: Operator,
    b: np.ndarray,
    precond: Optional[Operator] = None,
    tol: float = 1e-8,
    maxit: int = 1000,
    x0: Optional[np.ndarray] = None,
) -> IterativeResult:
    """Preconditioned conjugate gradients for an SPD operator.

    Args:
        apply_A: v -> A v, A symmetric positive definite
        b: Right-hand side
        precond: v -> P^{-1} v, P symmetric positive definite; identity when omitted
        tol: Stop once ||A x - b|| <= tol * ||b||
        maxit: Iteration cap
        x0: Starting point, zero when omitted

    Returns:
        IterativeResult; converged is False when maxit was reached
    """
    b = np.asarray(b, dtype=np.float64)
    M = precond or _identity
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return IterativeResult(x=np.zeros_like(b), iters=0, converged=True, relative_residual=0.0)

    if x0 is None:
        x = np.zeros_like(b)
        r = b.copy()
    else:
        if x0.shape != b.shape:
            raise DimensionMismatchError(f"x0 shape {x0.shape} does not match b {b.shape}")
        x = np.array(x0, dtype=np.float64)
        r = b - apply_A(x)
    target = tol * norm_b
    norm_r = float(np.linalg.norm(r))
    if norm_r <= target:
        return IterativeResult(x=x, iters=0, converged=True, relative_residual=norm_r / norm_b)

    z = M(r)
    p = z.copy()
    rz = float(r @ z)
    for k in range(1, maxit + 1):
        Ap = apply_A(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            logger.warning(f"pcg: non-positive curvature {pAp:.3e} at iteration {k}")
            return IterativeResult(x=x, iters=k, converged=False, relative_residual=norm_r / norm_b)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        norm_r = float(np.linalg.norm(r))
        if norm_r <= target:
            return IterativeResult(x=x, iters=k, converged=True, relative_residual=norm_r / norm_b)
        z = M(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return IterativeResult(x=x, iters=maxit, converged=False, relative_residual=norm_r / norm_b)


def gmres_solve(
    apply_A: Operator,
    b: np.ndarray,
    precond: Optional[Operator] = None,
    tol: float = 1e-8,
    maxit: int = 1000,
    restart: int = 50,
) -> IterativeResult:
    """Restarted GMRES through scipy with an optional left preconditioner."""
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    norm_b = float(np.linalg.norm(b))
    if norm_b == 0.0:
        return IterativeResult(x=np.zeros_like(b), iters=0, converged=True, relative_residual=0.0)
    A = spla.LinearOperator((n, n), matvec=apply_A, dtype=np.float64)
    P = spla.LinearOperator((n, n), matvec=precond, dtype=np.float64) if precond is not None else None
    counter = {"iters": 0}

    def _count(_: float) -> None:
        counter["iters"] += 1

    x, info = spla.gmres(
        A,
        b,
        rtol=tol,
        atol=0.0,
        restart=restart,
        maxiter=max(1, maxit // restart),
        M=P,
        callback=_count,
        callback_type="pr_norm",
    )
    relres = float(np.linalg.norm(apply_A(x) - b)) / norm_b
    return IterativeResult(x=x, iters=counter["iters"], converged=info == 0, relative_residual=relres)


def jacobi_preconditioner(diagonal: np.ndarray) -> Operator:
    """Inverse-diagonal preconditioner; non-positive entries fall back to 1."""
    d = np.asarray(diagonal, dtype=np.float64)
    inv = np.where(d > 0, 1.0 / np.where(d > 0, d, 1.0), 1.0)
    return lambda v: inv * v


def ilu_preconditioner(M: sp.spmatrix, drop_tol: float = 1e-4) -> Operator:
    """Incomplete LU preconditioner of a sparse matrix."""
    ilu = spla.spilu(sp.csc_matrix(M), drop_tol=drop_tol)
    return ilu.solve


def op_norm_estimate(apply_A: Operator, dim: int, iters: int = 50, seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD operator by power iteration.

    The Rayleigh quotient never exceeds the true value; callers upscale it
    before using it as a step-size bound.
    """
    if dim == 0:
        return 0.0
    v = np.random.default_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iters):
        w = apply_A(v)
        rayleigh = float(v @ w)
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(rayleigh - estimate) <= 1e-12 * max(abs(rayleigh), 1.0):
            estimate = rayleigh
            break
        estimate = rayleigh
    return max(estimate, 0.0)


def min_eig_estimate(
    apply_A: Operator, dim: int, upper: Optional[float] = None, iters: int = 100, seed: int = 0
) -> float:
    """Smallest eigenvalue of a symmetric operator by shifted power iteration.

    Power iteration runs on upper*I - A, whose dominant eigenvalue is
    upper - lambda_min whenever upper bounds the spectrum from above.
    """
    if dim == 0:
        return 0.0
    if upper is None:
        upper = 1.1 * spectral_radius_bound(apply_A, dim, seed=seed) + 1e-12
    mu = op_norm_estimate(lambda v: upper * v - apply_A(v), dim, iters=iters, seed=seed + 1)
    return upper - mu


def _abs_operator(apply_A: Operator) -> Operator:
    # A^T A has the squared spectrum, so sqrt of its top eigenvalue bounds |lambda|
    return lambda v: apply_A(apply_A(v))


def spectral_radius_bound(apply_A: Operator, dim: int, seed: int = 0) -> float:
    """Estimate of max |lambda| for a symmetric, possibly indefinite operator."""
    return float(np.sqrt(op_norm_estimate(_abs_operator(apply_A), dim, seed=seed)))
