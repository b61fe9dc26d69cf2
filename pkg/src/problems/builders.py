"""Constructors of the built-in problem families."""

from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp

from src.core.constants import ProblemKind
from src.core.exceptions import ConstructionError, DimensionMismatchError
from src.linalg.sparse import canonical, stack_rows
from src.problems.base import ProblemSpec
from src.problems.data import Forcing, sample_forcing
from src.problems.operators import (
    Edge,
    dirichlet_laplacian,
    edge_incidence,
    graph_difference_operator,
    grid_difference_operator,
)
from src.problems.smooth import CauchySmooth, LeastSquaresSmooth, QuadraticSmooth
from src.utils.logger import get_logger

logger = get_logger(__name__)


def build_quadratic_tv(grid_n: int, forcing: Forcing, beta: float) -> ProblemSpec:
    """Anisotropic viscoplastic model: 1/2 u^T A u - b^T u + beta*||grad u||_1.

    Args:
        grid_n: Interior nodes per side; m = grid_n^2
        forcing: Constant or callable (x, y) -> z sampled at interior nodes
        beta: Penalty weight

    Returns:
        ProblemSpec with the h^2-scaled Dirichlet Laplacian as curvature
    """
    if grid_n < 2:
        raise ConstructionError(f"grid_n must be at least 2, got {grid_n}")
    h = 1.0 / (grid_n + 1)
    A = dirichlet_laplacian(grid_n)
    b = h * h * sample_forcing(forcing, grid_n)
    C = grid_difference_operator(grid_n)
    logger.info(f"Built quadratic_tv problem: grid {grid_n}x{grid_n}, {C.shape[0]} penalty rows, beta={beta}")
    return ProblemSpec.create(
        QuadraticSmooth(A, b, spd_guaranteed=True),
        C,
        beta,
        kind=ProblemKind.QUADRATIC_TV,
        meta={"grid_n": grid_n},
    )


def build_deconvolution(
    A: Union[np.ndarray, sp.spmatrix],
    y: np.ndarray,
    alpha: float,
    beta: float,
    neighbor_edges: Sequence[Edge],
) -> ProblemSpec:
    """Fused deconvolution 1/2||Ax - y||^2 + alpha*||x||_1 + beta*sum_E |x_i - x_j|.

    The penalty is one stacked matrix: identity rows weighted alpha/w on top of
    the edge incidence rows weighted beta/w, with overall weight w = beta (or
    alpha when beta is 0).
    """
    y = np.asarray(y, dtype=np.float64)
    if A.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"A has {A.shape[0]} rows, y has length {y.shape[0]}")
    if alpha < 0 or beta < 0 or (alpha == 0 and beta == 0):
        raise ConstructionError(f"need alpha, beta >= 0 and not both zero, got alpha={alpha}, beta={beta}")
    m = A.shape[1]
    weight = beta if beta > 0 else alpha
    blocks, weights = [], []
    if alpha > 0:
        blocks.append(sp.identity(m, format="csr"))
        weights.append(np.full(m, alpha / weight))
    if beta > 0 and len(neighbor_edges) > 0:
        incidence = edge_incidence(neighbor_edges, m)
        blocks.append(incidence)
        weights.append(np.full(incidence.shape[0], beta / weight))
    if not blocks:
        raise ConstructionError("penalty is empty: beta > 0 needs at least one neighbour edge")
    logger.info(f"Built deconvolution problem: m={m}, {len(neighbor_edges)} edges, alpha={alpha}, beta={beta}")
    return ProblemSpec.create(
        LeastSquaresSmooth(A, y),
        stack_rows(blocks),
        weight,
        row_weights=np.concatenate(weights),
        kind=ProblemKind.DECONVOLUTION,
        meta={"alpha": alpha, "beta": beta},
    )


def build_cauchy_denoise(f_obs: np.ndarray, a: float, beta: float, grid_n: int) -> ProblemSpec:
    """Nonconvex Cauchy denoising sum log(a + (u - f)^2) + beta*||grad u||_1."""
    f_obs = np.asarray(f_obs, dtype=np.float64)
    if a <= 0:
        raise ConstructionError(f"Cauchy scale a must be positive, got {a}")
    if f_obs.shape != (grid_n * grid_n,):
        raise DimensionMismatchError(f"f_obs has shape {f_obs.shape}, expected ({grid_n * grid_n},)")
    logger.info(f"Built cauchy problem: grid {grid_n}x{grid_n}, a={a}, beta={beta}")
    return ProblemSpec.create(
        CauchySmooth(f_obs, a),
        grid_difference_operator(grid_n),
        beta,
        kind=ProblemKind.CAUCHY,
        meta={"grid_n": grid_n, "a": a},
    )


def build_graph_trend(
    edges: Sequence[Edge],
    y: np.ndarray,
    beta1: float,
    beta2: float,
    order: int = 2,
    n_nodes: Optional[int] = None,
) -> ProblemSpec:
    """Graph trend filtering 1/2||x - y||^2 + beta1*||Delta(order) x||_1 + beta2*||x||_1."""
    y = np.asarray(y, dtype=np.float64)
    if beta1 < 0 or beta2 < 0 or (beta1 == 0 and beta2 == 0):
        raise ConstructionError(f"need beta1 > 0 or beta2 > 0, got beta1={beta1}, beta2={beta2}")
    n = n_nodes if n_nodes is not None else y.shape[0]
    if edges:
        n = max(n, 1 + max(max(i, j) for i, j in edges))
    if n != y.shape[0]:
        raise DimensionMismatchError(f"graph has {n} nodes, signal has length {y.shape[0]}")
    blocks, weights = [], []
    if beta1 > 0:
        delta = graph_difference_operator(edges, n, order)
        blocks.append(delta)
        weights.append(np.full(delta.shape[0], beta1))
    if beta2 > 0:
        blocks.append(sp.identity(n, format="csr"))
        weights.append(np.full(n, beta2))
    C = stack_rows(blocks)
    row_weights = np.concatenate(weights)
    # Structurally present rows that cancel to zero are dropped with their weights
    keep = np.flatnonzero(np.diff(C.indptr) > 0) if C.nnz else np.zeros(0, dtype=np.int64)
    logger.info(f"Built graph_trend problem: {n} nodes, {len(edges)} edges, order {order}")
    return ProblemSpec.create(
        QuadraticSmooth.distance_to(y),
        canonical(C[keep, :]),
        1.0,
        row_weights=row_weights[keep],
        kind=ProblemKind.GRAPH_TREND,
        meta={"beta1": beta1, "beta2": beta2, "order": order},
    )


def build_prox_instance(xhat: np.ndarray, C: sp.spmatrix, alpha: float) -> ProblemSpec:
    """Proximal-map subproblem argmin 1/2||x - xhat||^2 + alpha*||Cx||_1."""
    xhat = np.asarray(xhat, dtype=np.float64)
    if alpha <= 0:
        raise ConstructionError(f"alpha must be positive, got {alpha}")
    if C.shape[1] != xhat.shape[0]:
        raise DimensionMismatchError(f"C has {C.shape[1]} columns, xhat has length {xhat.shape[0]}")
    return ProblemSpec.create(
        QuadraticSmooth.distance_to(xhat),
        C,
        alpha,
        kind=ProblemKind.PROX,
        meta={"alpha": alpha},
    )
