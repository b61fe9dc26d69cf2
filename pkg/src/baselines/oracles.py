"""Brute-force grid oracles for tiny instances, used by the test-suite."""

import itertools
from typing import Tuple

import numpy as np
import scipy.sparse as sp

from src.core.exceptions import ConstructionError
from src.problems.base import ProblemSpec, eval_cost

_CHUNK = 200_000


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return np.linspace(lo, hi, n + 1)


def grid_oracle_qp(
    g: np.ndarray, C_A: sp.spmatrix, beta: float, step: float = 0.01
) -> Tuple[np.ndarray, float]:
    """Exhaustive minimum of 1/2 ||g + beta C_A^T xi||^2 over a grid of [-1, 1]^p.

    Raises:
        ConstructionError: If C_A has more than 3 rows
    """
    CA = C_A.toarray() if sp.issparse(C_A) else np.asarray(C_A, dtype=np.float64)
    p = CA.shape[0]
    if p > 3:
        raise ConstructionError(f"grid oracle supports at most 3 active rows, got {p}")
    g = np.asarray(g, dtype=np.float64)
    if p == 0:
        return np.zeros(0), 0.5 * float(g @ g)

    axis = _axis(-1.0, 1.0, step)
    best_xi, best_obj = np.zeros(p), np.inf
    points = itertools.product(axis, repeat=p)
    while True:
        chunk = np.array(list(itertools.islice(points, _CHUNK)))
        if chunk.size == 0:
            break
        residuals = g[None, :] + beta * chunk @ CA
        objs = 0.5 * np.einsum("ij,ij->i", residuals, residuals)
        i = int(np.argmin(objs))
        if objs[i] < best_obj:
            best_xi, best_obj = chunk[i].copy(), float(objs[i])
    return best_xi, best_obj


def grid_oracle_phi(
    p: ProblemSpec, box: Tuple[float, float] = (-5.0, 5.0), step: float = 0.01
) -> Tuple[np.ndarray, float]:
    """Grid search of phi over box^m followed by one refinement at step/100.

    Raises:
        ConstructionError: If the problem has more than 2 variables
    """
    if p.dim > 2:
        raise ConstructionError(f"grid oracle supports at most 2 variables, got {p.dim}")

    def search(axes) -> Tuple[np.ndarray, float]:
        best_x, best_cost = None, np.inf
        for point in itertools.product(*axes):
            x = np.array(point)
            cost = eval_cost(p, x)
            if cost < best_cost:
                best_x, best_cost = x, cost
        return best_x, best_cost

    lo, hi = box
    x, cost = search([_axis(lo, hi, step)] * p.dim)
    fine = [_axis(c - step, c + step, step / 100.0) for c in x]
    return search(fine)
