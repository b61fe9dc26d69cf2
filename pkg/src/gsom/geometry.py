"""Sign-change detection, projection onto {x : C_S x = 0} and the projected line search."""

from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from src.core.constants import SlopeKind
from src.core.exceptions import NotPositiveDefiniteError
from src.core.solver_settings import LinesearchSettings
from src.gsom.subgradient import SubgradientState
from src.linalg.dense import chol_solve
from src.linalg.sparse import gram_small, select_rows, sparse_direct_solve
from src.problems.base import ProblemSpec, eval_cost
from src.utils.logger import get_logger

logger = get_logger(__name__)


class SignChangeSet(BaseModel):
    """Penalty rows pinned to zero for one trial step."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: np.ndarray = Field(description="S, increasing row indices")
    Cs: sp.csr_matrix = Field(description="Rows of C selected by S")
    trial_x: np.ndarray = Field(description="Unprojected trial point x + s*d")

    @property
    def size(self) -> int:
        return int(self.indices.size)


class LineSearchResult(BaseModel):
    """Outcome of the projected backtracking line search."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    step: float
    x_next: np.ndarray
    cost: float
    sign_change: np.ndarray = Field(description="S used for the returned point")
    trials: int
    stalled: bool = Field(default=False, description="No trial passed the decrease test before s_min")
    pinned_interior: bool = Field(
        default=False, description="Active rows with |xi_i| < 1 were held at zero for this step"
    )
    gradient_step: bool = Field(default=False, description="The step runs along -residual instead of d")


def _sign_band(t: np.ndarray, tol: float) -> np.ndarray:
    return np.where(np.abs(t) <= tol, 0.0, np.sign(t))


def sign_change_set(
    C: sp.csr_matrix,
    x: np.ndarray,
    xi: np.ndarray,
    trial: np.ndarray,
    tol_act: float,
    pinned: Optional[np.ndarray] = None,
) -> SignChangeSet:
    """Rows whose sign changes along the trial step.

    Inactive rows join S when their banded sign at the trial differs from the
    one at x. Active rows join S when sign(xi_i) * <c_i, trial - x> <= 0, that
    is, unless the step leaves zero in the direction the multiplier points to.
    Rows listed in ``pinned`` are always in S.
    """
    cx = np.asarray(C @ x)
    ct = np.asarray(C @ trial)
    active = np.abs(cx) <= tol_act
    flipped = ~active & (_sign_band(ct, tol_act) != _sign_band(cx, tol_act))
    held = active & (np.sign(xi) * (ct - cx) <= 0.0)
    if pinned is not None and pinned.size:
        held[pinned] = True
    indices = np.flatnonzero(flipped | held)
    return SignChangeSet(indices=indices, Cs=select_rows(C, indices), trial_x=trial)


def _gram_solve(G: np.ndarray, rhs: np.ndarray, eps_reg: float) -> Tuple[np.ndarray, bool]:
    try:
        return chol_solve(G, rhs), False
    except NotPositiveDefiniteError:
        eps = eps_reg * max(float(np.max(np.diag(G))), 1.0)
        return chol_solve(G + eps * np.eye(G.shape[0]), rhs), True


def project_onto_AS(
    x: np.ndarray, Cs: sp.csr_matrix, eps_reg: float = 1e-10, dense_budget: int = 2000
) -> Tuple[np.ndarray, np.ndarray]:
    """Euclidean projection of x onto the null space of Cs.

    Solves (Cs Cs^T) y = Cs x and returns x - Cs^T y, with one refinement pass.
    A rank-deficient Gram matrix is regularized by eps * I with
    eps = eps_reg * max(max diag, 1). Sets larger than dense_budget use a
    regularized sparse LU instead of the dense Cholesky.

    Returns:
        (projected point, multiplier y)
    """
    x = np.asarray(x, dtype=np.float64)
    if Cs.shape[0] == 0:
        return x.copy(), np.zeros(0)

    if Cs.shape[0] <= dense_budget:
        G = gram_small(Cs)
        y, regularized = _gram_solve(G, np.asarray(Cs @ x), eps_reg)
        if regularized:
            logger.warning(f"Rank-deficient projection on {Cs.shape[0]} rows; regularized")

        def solve(rhs: np.ndarray) -> np.ndarray:
            return _gram_solve(G, rhs, eps_reg)[0]

    else:
        Gs = sp.csr_matrix(Cs @ Cs.T)
        eps = eps_reg * max(float(Gs.diagonal().max()), 1.0)
        Gs = Gs + eps * sp.identity(Gs.shape[0], format="csr")

        def solve(rhs: np.ndarray) -> np.ndarray:
            return sparse_direct_solve(Gs, rhs)

        y = solve(np.asarray(Cs @ x))

    xt = x - np.asarray(Cs.T @ y)
    correction = solve(np.asarray(Cs @ xt))
    return xt - np.asarray(Cs.T @ correction), y + correction


def interior_active_rows(state: SubgradientState) -> np.ndarray:
    """Active rows whose multiplier lies strictly inside (-1, 1)."""
    act = state.partition.act
    return act[np.abs(state.xi[act]) < 1.0]


def _backtrack(
    p: ProblemSpec,
    x: np.ndarray,
    d: np.ndarray,
    state: SubgradientState,
    cfg: LinesearchSettings,
    phi_x: float,
    slope: np.ndarray,
    pinned: Optional[np.ndarray] = None,
) -> LineSearchResult:
    tol_act = state.partition.tol_act
    best: Optional[LineSearchResult] = None
    step, trials = 1.0, 0
    while trials < cfg.max_backtracks and step >= cfg.s_min:
        trials += 1
        changes = sign_change_set(p.C, x, state.xi, x + step * d, tol_act, pinned)
        candidate, _ = project_onto_AS(changes.trial_x, changes.Cs, cfg.eps_reg, cfg.dense_budget)
        cost = eval_cost(p, candidate)
        result = LineSearchResult(step=step, x_next=candidate, cost=cost, sign_change=changes.indices, trials=trials)
        if cost < phi_x and cost <= phi_x + cfg.sigma * float(slope @ (candidate - x)):
            return result
        if best is None or cost < best.cost:
            best = result
        step *= 0.5

    if best is None:
        return LineSearchResult(
            step=0.0, x_next=x.copy(), cost=phi_x, sign_change=np.zeros(0, dtype=np.int64), trials=0, stalled=True
        )
    return best.model_copy(update={"stalled": True, "trials": trials})


def projected_linesearch(
    p: ProblemSpec,
    x: np.ndarray,
    d: np.ndarray,
    state: SubgradientState,
    cfg: Optional[LinesearchSettings] = None,
    cost_x: Optional[float] = None,
) -> LineSearchResult:
    """Backtrack s = 1, 1/2, 1/4, ... on the projected trial points.

    For each trial the sign-change set of x + s*d is projected out and the
    candidate is accepted when it decreases the cost and satisfies
    phi(cand) <= phi(x) + sigma * v^T (cand - x), v the configured slope vector.

    When no trial is accepted the search is repeated with every active row
    whose multiplier lies strictly inside (-1, 1) held at zero, so the iterate
    stays in the null space of those rows. If that fails as well, the pinned
    search runs along -residual, which is orthogonal to the held rows.

    Args:
        p: Problem
        x: Current iterate
        d: Descent direction with d^T residual < 0
        state: Subgradient state at x
        cfg: Line search settings
        cost_x: phi(x) when already known

    Returns:
        LineSearchResult; when stalled it holds the lowest-cost trial evaluated
    """
    cfg = cfg or LinesearchSettings()
    phi_x = eval_cost(p, x) if cost_x is None else cost_x
    slope = state.residual if cfg.slope == SlopeKind.MINNORM else state.tilde_grad

    result = _backtrack(p, x, d, state, cfg, phi_x, slope)
    if not result.stalled:
        return result
    attempts = [result]

    interior = interior_active_rows(state)
    if interior.size:
        pinned = _backtrack(p, x, d, state, cfg, phi_x, slope, interior)
        pinned = pinned.model_copy(update={"pinned_interior": True})
        if not pinned.stalled:
            logger.debug(f"Step accepted with {interior.size} interior active rows held at zero")
            return pinned
        attempts.append(pinned)

    if np.any(state.residual):
        along = _backtrack(p, x, -state.residual, state, cfg, phi_x, slope, interior)
        along = along.model_copy(update={"pinned_interior": bool(interior.size), "gradient_step": True})
        if not along.stalled:
            logger.debug("Step accepted along -residual")
            return along
        attempts.append(along)

    best = min(attempts, key=lambda r: r.cost)
    trials = sum(r.trials for r in attempts)
    logger.warning(f"Line search stalled after {trials} trials (best cost {best.cost:.6e} vs {phi_x:.6e})")
    return best.model_copy(update={"trials": trials})
