"""Second-order driver for min f(x) + beta*||Cx||_1.

Each iteration classifies the penalty rows, solves the minimum-norm
subgradient QP, builds the clamped system with the weak Hessian, solves for
the direction (optionally on the free coordinates only) and takes a projected
backtracking step.
"""

import time
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.constants import Termination
from src.core.exceptions import EvaluationError
from src.core.solver_settings import SolverConfig
from src.gsom.curvature import SystemOperator, assemble_system, build_huber_operator, default_kappa_min
from src.gsom.direction import ActiveSplit, DirectionResult, identify_active, solve_direction
from src.gsom.geometry import projected_linesearch
from src.gsom.subgradient import SubgradientState, classify_indices, default_tol_act, min_norm_subgradient
from src.problems.base import CurvatureInfo, ProblemSpec, eval_cost
from src.schemas.report import IterationRecord, SolveReport
from src.utils.logger import get_logger

logger = get_logger(__name__)


class IterationSnapshot(BaseModel):
    """State the stopping test looks at."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    iteration: int = Field(description="Completed iterations")
    x: np.ndarray
    cost: float
    residual_norm: float
    reference_cost: float = Field(description="phi(x0), scales the residual threshold")
    unit_step: bool = Field(default=True, description="x came from a full step along the Newton direction")


class IterationContext(BaseModel):
    """Everything the solver knows right after computing a direction."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    iteration: int
    x: np.ndarray
    state: SubgradientState
    system: SystemOperator
    split: Optional[ActiveSplit] = None
    direction: DirectionResult


Observer = Callable[[IterationContext], None]


def residual_threshold(reference_cost: float, cfg: SolverConfig) -> float:
    """tol_residual * (1 + |phi(x0)|)."""
    return cfg.tol_residual * (1.0 + abs(reference_cost))


def check_stop(prev: Optional[IterationSnapshot], curr: IterationSnapshot, cfg: SolverConfig) -> Optional[Termination]:
    """First satisfied stopping criterion, in priority order.

    ResidualSmall, then the consecutive-iterate test (reported as CostSmall:
    both the step and the cost change are below tolerance), then MaxIter.
    The consecutive-iterate test only applies when x came from a unit step along d.
    """
    if curr.residual_norm <= residual_threshold(curr.reference_cost, cfg):
        return Termination.RESIDUAL_SMALL
    if prev is not None and curr.unit_step:
        step = float(np.linalg.norm(curr.x - prev.x))
        step_small = step <= cfg.tol_x * (1.0 + float(np.linalg.norm(prev.x)))
        cost_small = abs(curr.cost - prev.cost) <= cfg.tol_f * (1.0 + abs(prev.cost))
        if step_small and cost_small:
            return Termination.COST_SMALL
    if curr.iteration >= cfg.max_iter:
        return Termination.MAX_ITER
    return None


class GsomSolver:
    """One solver instance per run; owns the warm-start and curvature caches."""

    def __init__(self, problem: ProblemSpec, cfg: Optional[SolverConfig] = None, observer: Optional[Observer] = None):
        self.problem = problem
        self.cfg = cfg or SolverConfig()
        self.observer = observer
        self._warm_act: Optional[np.ndarray] = None
        self._warm_xi: Optional[np.ndarray] = None
        self._kappa: Optional[float] = None

    def subgradient(self, x: np.ndarray) -> SubgradientState:
        """Partition and minimum-norm subgradient at x, warm-started when A is unchanged."""
        cfg = self.cfg
        part = classify_indices(self.problem.C, x, default_tol_act(x, cfg.tol_act))
        warm = None
        if cfg.subproblem.warm_start and self._warm_act is not None and np.array_equal(self._warm_act, part.act):
            warm = self._warm_xi
        state = min_norm_subgradient(
            self.problem,
            x,
            part,
            warm_start=warm,
            tol_qp=cfg.subproblem.tol_qp,
            maxit_qp=cfg.subproblem.maxit_qp,
            seed=cfg.seed,
        )
        self._warm_act, self._warm_xi = part.act, state.xi_active
        return state

    def _kappa_for(self, curvature: CurvatureInfo) -> float:
        if self.cfg.kappa_min is not None:
            return self.cfg.kappa_min
        if self._kappa is not None:
            return self._kappa
        kappa = default_kappa_min(curvature)
        if self.problem.smooth.is_quadratic:
            self._kappa = kappa
        return kappa

    def system(self, x: np.ndarray, iteration: int) -> SystemOperator:
        """Clamped B + beta*Gamma at x with the Huber parameter of this iteration."""
        curvature = self.problem.smooth.curvature(x)
        huber = build_huber_operator(self.problem.C, x, self.cfg.gamma_at(iteration))
        return assemble_system(curvature, huber, self.problem.beta, self._kappa_for(curvature), seed=self.cfg.seed)

    def direction(
        self, system: SystemOperator, state: SubgradientState
    ) -> tuple[DirectionResult, Optional[ActiveSplit]]:
        """Direction at the current state, reduced to the free coordinates when enabled."""
        cfg = self.cfg
        split = None
        if cfg.active_set_reduction:
            res = state.residual
            eps = cfg.eps_act * (1.0 + float(np.max(np.abs(res), initial=0.0)))
            split = identify_active(self.problem.C, state.partition, res, eps)
        result = solve_direction(system, state.residual, split, cfg.linsolve)
        if result.reduced and state.residual_norm > 0 and not np.any(result.d):
            logger.debug("Reduced direction vanished; solving the full system")
            split = None
            result = solve_direction(system, state.residual, None, cfg.linsolve)
        return result, split

    def _evaluate(self, x: np.ndarray, iteration: int) -> float:
        try:
            return eval_cost(self.problem, x)
        except EvaluationError as e:
            raise e.with_iteration(iteration) from e

    def run(self, x0: np.ndarray) -> SolveReport:
        """Iterate from x0 until a stopping criterion holds.

        Raises:
            EvaluationError: If f evaluates to NaN or Inf, tagged with the iteration
        """
        cfg = self.cfg
        started = time.perf_counter()
        x = np.array(x0, dtype=np.float64)
        cost = self._evaluate(x, 0)
        reference = cost
        threshold = residual_threshold(reference, cfg)
        trace: List[IterationRecord] = []
        prev: Optional[IterationSnapshot] = None
        unit_step = True
        logger.info(
            f"GSOM started: m={self.problem.dim}, n={self.problem.n_rows}, beta={self.problem.beta}, cost={cost:.6e}"
        )

        k = 0
        while True:
            iter_started = time.perf_counter()
            try:
                state = self.subgradient(x)
            except EvaluationError as e:
                raise e.with_iteration(k) from e
            snapshot = IterationSnapshot(
                iteration=k,
                x=x,
                cost=cost,
                residual_norm=state.residual_norm,
                reference_cost=reference,
                unit_step=unit_step,
            )
            termination = check_stop(prev, snapshot, cfg)
            if termination is not None:
                break

            system = self.system(x, k)
            direction, split = self.direction(system, state)
            slope = float(direction.d @ state.residual)
            if not slope < 0.0:
                logger.warning(f"Iteration {k}: direction is not a descent direction (d^T r = {slope:.3e})")
                termination = Termination.STALLED
                break
            if self.observer is not None:
                self.observer(
                    IterationContext(iteration=k, x=x, state=state, system=system, split=split, direction=direction)
                )

            try:
                search = projected_linesearch(self.problem, x, direction.d, state, cfg.linesearch, cost_x=cost)
            except EvaluationError as e:
                raise e.with_iteration(k + 1) from e

            accepted = search.cost < cost
            if accepted:
                prev = snapshot
                x, cost = search.x_next, search.cost
                unit_step = search.step >= 1.0 and not search.gradient_step
                k += 1
                trace.append(
                    IterationRecord(
                        iter=k,
                        cost=cost,
                        residual=state.residual_norm,
                        step=search.step,
                        n_active=int(state.partition.act.size),
                        n_signchange=int(search.sign_change.size),
                        n_frozen=direction.frozen_count,
                        qp_iters=state.qp_iters,
                        lin_residual=direction.linear_residual,
                        wall_ms=1e3 * (time.perf_counter() - iter_started),
                    )
                )
                logger.debug(
                    f"iter {k}: cost={cost:.10e} residual={state.residual_norm:.3e} step={search.step:.3e} "
                    f"|A|={state.partition.act.size} |S|={search.sign_change.size} |I0|={direction.frozen_count}"
                )
            if search.stalled:
                near = state.residual_norm <= cfg.linesearch.stall_residual_factor * threshold
                termination = Termination.STEP_SMALL if near else Termination.STALLED
                if accepted:
                    state = self.subgradient(x)
                break

        report = SolveReport(
            solver="gsom",
            x_final=x,
            cost_final=cost,
            residual_final=state.residual_norm,
            termination=termination,
            iterations=k,
            trace=trace,
            wall_ms=1e3 * (time.perf_counter() - started),
        )
        logger.info(
            f"GSOM finished: {termination.value} after {k} iterations, "
            f"cost={cost:.10e}, residual={state.residual_norm:.3e}"
        )
        return report


def gsom_solve(
    p: ProblemSpec, x0: np.ndarray, cfg: Optional[SolverConfig] = None, observer: Optional[Observer] = None
) -> SolveReport:
    """Run the second-order method from x0.

    Args:
        p: Problem
        x0: Starting point of length p.dim
        cfg: Solver configuration, defaults when omitted
        observer: Called after each direction solve, before the line search

    Returns:
        SolveReport with the per-iteration trace
    """
    return GsomSolver(p, cfg, observer).run(x0)
