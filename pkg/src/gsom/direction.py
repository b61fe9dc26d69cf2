"""Descent direction from the second-order system M d = -residual.

Supports the full system, the active-set reduced system on free coordinates
and an overlapping block-Jacobi partitioned solve.
"""

import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from pydantic import BaseModel, ConfigDict, Field

from src.core import settings
from src.core.constants import BlockJacobiMode, LinsolveKind, PreconditionerKind, SolverUsed
from src.core.exceptions import DirectionError, NotPositiveDefiniteError
from src.core.solver_settings import LinsolveSettings
from src.gsom.curvature import SystemOperator
from src.gsom.subgradient import IndexPartition
from src.linalg.dense import chol_solve
from src.linalg.iterative import (
    IterativeResult,
    gmres_solve,
    ilu_preconditioner,
    jacobi_preconditioner,
    pcg_solve,
)
from src.linalg.sparse import select_rows, sparse_direct_solve
from src.problems.operators import breadth_first_ordering
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Bytes per stored factor entry: float64 value plus int32 index
_BYTES_PER_FACTOR_ENTRY = 12


class ActiveSplit(BaseModel):
    """Split of the coordinates into frozen (I0) and free (IF) ones."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    frozen: np.ndarray = Field(description="I0: coordinates held at d_j = 0")
    free: np.ndarray = Field(description="IF: coordinates solved for")
    eps_act: float = Field(description="Absolute freezing band on the residual")


class DirectionResult(BaseModel):
    """Descent direction and how it was obtained."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    d: np.ndarray
    solver_used: SolverUsed
    linear_residual: float = Field(description="||M d + r|| / (1 + ||r||) on the solved system")
    reduced: bool = False
    frozen_count: int = 0
    iters: int = 0
    converged: bool = True
    fallback: bool = Field(default=False, description="An iterative solve failed and the direct solve took over")
    wall_ms: float = 0.0
    max_block_size: Optional[int] = Field(default=None, description="Largest factored block (block-Jacobi)")
    factor_storage_kb: Optional[float] = Field(default=None, description="Storage of the block factors in KB")


def identify_active(C: sp.csr_matrix, part: IndexPartition, residual: np.ndarray, eps_act: float) -> ActiveSplit:
    """Freeze coordinates touched by an active row whose residual entry is within eps_act of zero."""
    m = C.shape[1]
    touched = np.zeros(m, dtype=bool)
    if part.act.size:
        touched[np.unique(select_rows(C, part.act).indices)] = True
    frozen_mask = touched & (np.abs(residual) <= eps_act)
    return ActiveSplit(
        frozen=np.flatnonzero(frozen_mask),
        free=np.flatnonzero(~frozen_mask),
        eps_act=eps_act,
    )


def _relative_residual(M: SystemOperator, d: np.ndarray, residual: np.ndarray) -> float:
    return float(np.linalg.norm(M.apply(d) + residual)) / (1.0 + float(np.linalg.norm(residual)))


def _krylov_tol(tol: float, rhs: np.ndarray) -> float:
    # pcg/gmres measure ||Ax - b|| / ||b||; the direction contract divides by 1 + ||b||
    norm = float(np.linalg.norm(rhs))
    return tol * (1.0 + norm) / norm if norm > 0 else tol


def _direct(M: SystemOperator, rhs: np.ndarray, cfg: LinsolveSettings) -> np.ndarray:
    try:
        if M.dim <= cfg.dense_limit:
            return chol_solve(M.assembled.toarray(), rhs)
        return sparse_direct_solve(M.assembled, rhs)
    except NotPositiveDefiniteError as e:
        raise DirectionError(f"direct solve of the clamped system failed: {e}") from e


def _preconditioner(M: SystemOperator, cfg: LinsolveSettings):
    if cfg.preconditioner == PreconditionerKind.ILU and M.can_assemble:
        return ilu_preconditioner(M.assembled, drop_tol=cfg.ilu_drop_tol)
    return jacobi_preconditioner(M.diagonal())


def _resolve_kind(M: SystemOperator, cfg: LinsolveSettings) -> LinsolveKind:
    kind = cfg.kind
    if kind == LinsolveKind.AUTO:
        kind = LinsolveKind.DIRECT if M.dim <= cfg.auto_direct_limit else LinsolveKind.PCG
    if kind in (LinsolveKind.DIRECT, LinsolveKind.BLOCK_JACOBI) and not M.can_assemble:
        logger.debug(f"{kind.value} needs an assembled system; using pcg on the matrix-free operator")
        kind = LinsolveKind.PCG
    return kind


def _solve_system(M: SystemOperator, residual: np.ndarray, cfg: LinsolveSettings) -> DirectionResult:
    rhs = -residual
    kind = _resolve_kind(M, cfg)

    if kind == LinsolveKind.DIRECT:
        d = _direct(M, rhs, cfg)
        return DirectionResult(d=d, solver_used=SolverUsed.DIRECT, linear_residual=_relative_residual(M, d, residual))

    if kind == LinsolveKind.BLOCK_JACOBI:
        result = block_jacobi_solve(M, residual, cfg.partitions, cfg.overlap, cfg)
    else:
        precond = _preconditioner(M, cfg)
        tol = _krylov_tol(cfg.tol, rhs)
        if kind == LinsolveKind.GMRES:
            it: IterativeResult = gmres_solve(
                M.apply, rhs, precond, tol=tol, maxit=cfg.maxit, restart=cfg.gmres_restart
            )
            used = SolverUsed.GMRES
        else:
            it = pcg_solve(M.apply, rhs, precond, tol=tol, maxit=cfg.maxit)
            used = SolverUsed.PCG
        result = DirectionResult(
            d=it.x,
            solver_used=used,
            linear_residual=_relative_residual(M, it.x, residual),
            iters=it.iters,
            converged=it.converged,
        )

    if result.converged:
        return result
    if not M.can_assemble:
        logger.warning(f"{result.solver_used.value} not converged on a matrix-free system; keeping its iterate")
        return result
    logger.warning(
        f"{result.solver_used.value} not converged after {result.iters} iterations "
        f"(residual {result.linear_residual:.3e}); falling back to the direct solve"
    )
    d = _direct(M, rhs, cfg)
    return result.model_copy(
        update={
            "d": d,
            "solver_used": SolverUsed.DIRECT,
            "linear_residual": _relative_residual(M, d, residual),
            "fallback": True,
            "converged": True,
        }
    )


def solve_direction(
    M: SystemOperator,
    residual: np.ndarray,
    split: Optional[ActiveSplit] = None,
    cfg: Optional[LinsolveSettings] = None,
) -> DirectionResult:
    """Solve M d = -residual, on the free coordinates when a split is given.

    Args:
        M: Clamped SPD system operator
        residual: Minimum-norm composite residual
        split: Frozen/free coordinates; frozen ones get d_j = 0 exactly
        cfg: Linear solver settings

    Returns:
        DirectionResult with the full-length direction

    Raises:
        DirectionError: If the direct factorization of the clamped system fails
    """
    cfg = cfg or LinsolveSettings()
    started = time.perf_counter()
    m = residual.shape[0]

    if split is None or split.frozen.size == 0:
        result = _solve_system(M, residual, cfg)
        return result.model_copy(update={"wall_ms": 1e3 * (time.perf_counter() - started)})

    if split.free.size == 0:
        return DirectionResult(
            d=np.zeros(m),
            solver_used=SolverUsed.NONE,
            linear_residual=0.0,
            reduced=True,
            frozen_count=int(split.frozen.size),
            wall_ms=1e3 * (time.perf_counter() - started),
        )

    reduced = _solve_system(M.principal(split.free), residual[split.free], cfg)
    d = np.zeros(m)
    d[split.free] = reduced.d
    return reduced.model_copy(
        update={
            "d": d,
            "reduced": True,
            "frozen_count": int(split.frozen.size),
            "wall_ms": 1e3 * (time.perf_counter() - started),
        }
    )


def partition_blocks(m: int, partitions: int, overlap_frac: float) -> List[Tuple[int, int]]:
    """Contiguous index ranges [lo, hi) of the overlapping blocks.

    Blocks have ceil(m/p) coordinates and extend by round(overlap_frac*block)
    on each interior side, so no block exceeds ceil(m/p)*(1+2*overlap_frac)+1.
    """
    block = math.ceil(m / partitions)
    extend = int(math.floor(overlap_frac * block + 0.5))
    ranges = []
    for i in range(partitions):
        start, stop = i * block, min(m, (i + 1) * block)
        if start >= stop:
            break
        ranges.append((max(0, start - extend), min(m, stop + extend)))
    return ranges


def _lu_storage_kb(factors) -> float:
    entries = sum(f.L.nnz + f.U.nnz for f in factors)
    return entries * _BYTES_PER_FACTOR_ENTRY / 1024.0


def factor_storage_kb(A: sp.spmatrix) -> float:
    """Storage in KB of the sparse LU factors of the whole matrix."""
    return _lu_storage_kb([spla.splu(sp.csc_matrix(A))])


class _BlockFactors:
    """Sparse LU factors of the overlapping diagonal blocks of A."""

    def __init__(self, A: sp.csr_matrix, ranges: List[Tuple[int, int]], workers: int):
        self.ranges = ranges
        self.m = A.shape[0]
        cover = np.zeros(self.m)
        for lo, hi in ranges:
            cover[lo:hi] += 1.0
        self.inv_cover = 1.0 / cover
        self.sqrt_inv_cover = np.sqrt(self.inv_cover)
        self.workers = workers
        with ThreadPoolExecutor(max_workers=workers) as pool:
            self.factors = list(pool.map(lambda r: spla.splu(sp.csc_matrix(A[r[0] : r[1], r[0] : r[1]])), ranges))

    @property
    def max_block_size(self) -> int:
        return max(hi - lo for lo, hi in self.ranges)

    @property
    def storage_kb(self) -> float:
        return _lu_storage_kb(self.factors)

    def corrections(self, r: np.ndarray) -> np.ndarray:
        """sum_i V_i A_i^{-1} V_i^T r, summed in block order."""
        def solve_block(k: int) -> np.ndarray:
            lo, hi = self.ranges[k]
            return self.factors[k].solve(r[lo:hi])

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            parts = list(pool.map(solve_block, range(len(self.ranges))))
        out = np.zeros(self.m)
        for (lo, hi), part in zip(self.ranges, parts):
            out[lo:hi] += part
        return out

    def averaged(self, r: np.ndarray) -> np.ndarray:
        return self.inv_cover * self.corrections(r)

    def symmetric(self, r: np.ndarray) -> np.ndarray:
        return self.sqrt_inv_cover * self.corrections(self.sqrt_inv_cover * r)


def block_jacobi_solve(
    M: SystemOperator,
    residual: np.ndarray,
    partitions: int,
    overlap_frac: float,
    cfg: Optional[LinsolveSettings] = None,
    workers: Optional[int] = None,
) -> DirectionResult:
    """Overlapping block-Jacobi solve of M d = -residual.

    Each block's principal submatrix is factored once per call. In richardson
    mode the corrections are averaged over their cover count and added to d
    until the relative residual meets cfg.tol. In krylov mode the same block
    operator, weighted symmetrically, preconditions CG.

    Args:
        M: System operator with an assembled form
        residual: Right-hand side is -residual
        partitions: Number of contiguous blocks, >= 2
        overlap_frac: Overlap per interior side as a fraction of the block length
        cfg: Tolerance, sweep cap, mode and reordering
        workers: Threads for the block factorizations and solves

    Returns:
        DirectionResult flagged not converged when the sweep cap was reached
    """
    cfg = cfg or LinsolveSettings()
    if partitions < 2:
        raise DirectionError(f"block-Jacobi needs at least 2 partitions, got {partitions}")
    if not 0.0 <= overlap_frac < 0.5:
        raise DirectionError(f"overlap fraction must lie in [0, 0.5), got {overlap_frac}")
    started = time.perf_counter()
    A = M.assembled
    m = A.shape[0]
    rhs = -np.asarray(residual, dtype=np.float64)

    perm = breadth_first_ordering(A) if cfg.reorder_bfs else None
    if perm is not None:
        A = sp.csr_matrix(A[perm, :][:, perm])
        rhs = rhs[perm]

    factors = _BlockFactors(A, partition_blocks(m, partitions, overlap_frac), workers or settings.runtime.block_workers)
    scale = 1.0 + float(np.linalg.norm(rhs))

    if cfg.block_mode == BlockJacobiMode.KRYLOV:
        it = pcg_solve(
            lambda v: np.asarray(A @ v), rhs, factors.symmetric, tol=_krylov_tol(cfg.tol, rhs), maxit=cfg.block_maxit
        )
        d, iters, converged = it.x, it.iters, it.converged
    else:
        d = np.zeros(m)
        r = rhs.copy()
        iters, converged = 0, float(np.linalg.norm(r)) / scale <= cfg.tol
        while not converged and iters < cfg.block_maxit:
            d += factors.averaged(r)
            r = rhs - np.asarray(A @ d)
            iters += 1
            converged = float(np.linalg.norm(r)) / scale <= cfg.tol

    if perm is not None:
        unpermuted = np.empty(m)
        unpermuted[perm] = d
        d = unpermuted
    if not converged:
        logger.warning(f"block-Jacobi ({cfg.block_mode.value}, p={partitions}) not converged after {iters} sweeps")
    return DirectionResult(
        d=d,
        solver_used=SolverUsed.BLOCK_JACOBI,
        linear_residual=_relative_residual(M, d, residual),
        iters=iters,
        converged=converged,
        wall_ms=1e3 * (time.perf_counter() - started),
        max_block_size=factors.max_block_size,
        factor_storage_kb=factors.storage_kb,
    )
