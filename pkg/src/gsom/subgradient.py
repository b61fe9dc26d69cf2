"""Index classification and the minimum-norm subgradient.

At a point x the penalty rows split into P (<c_i,x> > 0), N (< 0) and A
(= 0 within a tolerance band). The multiplier xi is fixed to +-1 on P and N;
on A it solves the box-constrained QP

    min_{xi in [-1,1]^|A|} 1/2 ||g~ + beta C_A^T xi||^2

where g~ is the gradient of f plus the signed P/N rows. The residual
grad f + beta C^T xi is the composite gradient the direction system uses.
"""

from typing import Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from src.linalg.iterative import op_norm_estimate
from src.linalg.sparse import select_rows
from src.problems.base import ProblemSpec
from src.utils.logger import get_logger

logger = get_logger(__name__)


class IndexPartition(BaseModel):
    """Partition of the penalty rows by the sign of <c_i, x>."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    pos: np.ndarray = Field(description="Rows with <c_i,x> > tol_act")
    neg: np.ndarray = Field(description="Rows with <c_i,x> < -tol_act")
    act: np.ndarray = Field(description="Rows with |<c_i,x>| <= tol_act")
    tol_act: float = Field(description="Absolute classification band")

    @property
    def n_rows(self) -> int:
        return int(self.pos.size + self.neg.size + self.act.size)

    def sign_vector(self) -> np.ndarray:
        """+1 on P, -1 on N, 0 on A."""
        s = np.zeros(self.n_rows)
        s[self.pos] = 1.0
        s[self.neg] = -1.0
        return s


class SubgradientState(BaseModel):
    """Minimum-norm subgradient at a point."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    partition: IndexPartition
    xi: np.ndarray = Field(description="Full multiplier: +-1 on P/N, QP solution on A")
    gradient: np.ndarray = Field(description="Gradient of the smooth part")
    tilde_grad: np.ndarray = Field(description="grad f + beta*(sum_P c_i - sum_N c_i)")
    residual: np.ndarray = Field(description="grad f + beta C^T xi")
    residual_norm: float
    qp_iters: int = 0
    qp_converged: bool = True

    @property
    def xi_active(self) -> np.ndarray:
        return self.xi[self.partition.act]


def default_tol_act(x: np.ndarray, rel: float = 1e-8) -> float:
    """Classification band rel * (1 + ||x||_inf)."""
    return rel * (1.0 + float(np.max(np.abs(x), initial=0.0)))


def classify_indices(C: sp.csr_matrix, x: np.ndarray, tol_act: float) -> IndexPartition:
    """Split the rows of C into P, N and A at x."""
    cx = np.asarray(C @ x)
    return IndexPartition(
        pos=np.flatnonzero(cx > tol_act),
        neg=np.flatnonzero(cx < -tol_act),
        act=np.flatnonzero(np.abs(cx) <= tol_act),
        tol_act=tol_act,
    )


def tilde_grad(
    p: ProblemSpec, x: np.ndarray, part: IndexPartition, gradient: Optional[np.ndarray] = None
) -> np.ndarray:
    """grad f(x) + beta*sum_{P} c_i - beta*sum_{N} c_i."""
    g = p.smooth.gradient(x) if gradient is None else gradient
    return g + p.beta * np.asarray(p.C.T @ part.sign_vector())


class BoxQP:
    """min 1/2 ||g + beta C_A^T xi||^2 over the box [-1, 1]^p."""

    def __init__(self, g: np.ndarray, C_A: sp.csr_matrix, beta: float, seed: int = 0):
        self.g = g
        self.C_A = C_A
        self.beta = beta
        self.p = C_A.shape[0]
        lipschitz = beta * beta * op_norm_estimate(lambda v: C_A @ (C_A.T @ v), self.p, seed=seed)
        self.tau = 1.0 / (1.1 * lipschitz) if lipschitz > 0 else 1.0

    def residual_vector(self, xi: np.ndarray) -> np.ndarray:
        return self.g + self.beta * np.asarray(self.C_A.T @ xi)

    def objective(self, xi: np.ndarray) -> float:
        r = self.residual_vector(xi)
        return 0.5 * float(r @ r)

    def gradient(self, xi: np.ndarray) -> np.ndarray:
        return self.beta * np.asarray(self.C_A @ self.residual_vector(xi))

    def fixed_point_residual(self, xi: np.ndarray, tau: Optional[float] = None) -> float:
        step = self.tau if tau is None else tau
        moved = np.clip(xi - step * self.gradient(xi), -1.0, 1.0)
        return float(np.max(np.abs(xi - moved), initial=0.0))

    def solve(self, start: np.ndarray, tol: float, maxit: int) -> tuple:
        """Accelerated projected gradient with restart on objective increase.

        Returns:
            (xi, iterations, converged)
        """
        xi = np.clip(start, -1.0, 1.0)
        obj = self.objective(xi)
        y, t = xi.copy(), 1.0
        tau = self.tau
        if self.fixed_point_residual(xi, tau) <= tol:
            return xi, 0, True
        for k in range(1, maxit + 1):
            candidate = np.clip(y - tau * self.gradient(y), -1.0, 1.0)
            cand_obj = self.objective(candidate)
            if cand_obj > obj:
                if t == 1.0:
                    if self.fixed_point_residual(xi, tau) <= tol:
                        return xi, k, True
                    # a plain projected step went uphill: the Lipschitz estimate was too small
                    tau *= 0.5
                y, t = xi.copy(), 1.0
                continue
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = candidate + ((t - 1.0) / t_next) * (candidate - xi)
            xi, obj, t = candidate, cand_obj, t_next
            if self.fixed_point_residual(xi, tau) <= tol:
                return xi, k, True
        return xi, maxit, self.fixed_point_residual(xi, tau) <= tol


def min_norm_subgradient(
    p: ProblemSpec,
    x: np.ndarray,
    part: IndexPartition,
    warm_start: Optional[np.ndarray] = None,
    tol_qp: float = 1e-8,
    maxit_qp: int = 500,
    gradient: Optional[np.ndarray] = None,
    seed: int = 0,
) -> SubgradientState:
    """Minimum-norm element of grad f(x) + beta C^T d||.||_1(Cx).

    Args:
        p: Problem
        x: Point
        part: Partition of the rows at x
        warm_start: Previous multiplier on A (same A), used when it is not worse than zero
        tol_qp: Tolerance of the projected fixed-point residual
        maxit_qp: Iteration cap; the best iterate is returned flagged when reached
        gradient: Precomputed grad f(x)
        seed: Seed of the Lipschitz estimate

    Returns:
        SubgradientState with multiplier, residual and QP diagnostics
    """
    grad = p.smooth.gradient(x) if gradient is None else gradient
    g_tilde = tilde_grad(p, x, part, grad)
    xi = part.sign_vector()
    iters, converged = 0, True

    if part.act.size > 0 and p.beta > 0:
        qp = BoxQP(g_tilde, select_rows(p.C, part.act), p.beta, seed=seed)
        start = np.zeros(part.act.size)
        if warm_start is not None and warm_start.shape == start.shape:
            warm = np.clip(warm_start, -1.0, 1.0)
            if qp.objective(warm) <= qp.objective(start):
                start = warm
        xi_act, iters, converged = qp.solve(start, tol_qp, maxit_qp)
        if not converged:
            logger.warning(f"MinSub QP not converged after {iters} iterations on {part.act.size} active rows")
        xi[part.act] = xi_act

    residual = grad + p.beta * np.asarray(p.C.T @ xi)
    return SubgradientState(
        partition=part,
        xi=xi,
        gradient=grad,
        tilde_grad=g_tilde,
        residual=residual,
        residual_norm=float(np.linalg.norm(residual)),
        qp_iters=iters,
        qp_converged=converged,
    )
