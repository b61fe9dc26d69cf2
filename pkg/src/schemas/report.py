"""Pydantic models for solve reports and their CSV/JSON emission."""

from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_serializer

from src.core.constants import TRACE_COLUMNS, Termination
from src.utils.io import write_vector_csv


class IterationRecord(BaseModel):
    """One completed iteration of a solver."""

    iter: int = Field(description="Iteration number, starting at 1")
    cost: float = Field(description="Cost after the step")
    residual: float = Field(description="Composite residual norm at the point the step started from")
    step: float = Field(default=1.0, description="Accepted line-search step")
    n_active: int = Field(default=0, description="|A| at the starting point")
    n_signchange: int = Field(default=0, description="|S| of the accepted trial")
    n_frozen: int = Field(default=0, description="|I0| when active-set reduction is on")
    qp_iters: int = Field(default=0, description="Iterations of the minimum-norm subgradient QP")
    lin_residual: float = Field(default=0.0, description="Relative residual of the linear solve")
    wall_ms: float = Field(default=0.0, description="Wall time of the iteration")


class SolveReport(BaseModel):
    """Final iterate, termination reason and full trace of a solve."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    solver: str = Field(default="gsom", description="Method that produced the report")
    x_final: np.ndarray = Field(description="Final iterate")
    cost_final: float = Field(description="phi(x_final)")
    residual_final: Optional[float] = Field(default=None, description="Composite residual norm at x_final")
    termination: Termination
    iterations: int
    trace: List[IterationRecord] = Field(default_factory=list)
    wall_ms: float = Field(default=0.0, description="Total wall time")

    @field_serializer("x_final")
    def _serialize_x(self, x: np.ndarray) -> List[float]:
        return [float(v) for v in x]

    def trace_frame(self) -> pd.DataFrame:
        """Trace as a DataFrame with the fixed column order."""
        return pd.DataFrame([r.model_dump() for r in self.trace], columns=TRACE_COLUMNS)

    def costs(self) -> np.ndarray:
        return np.array([r.cost for r in self.trace])


def write_report(report: SolveReport, out_dir: Union[str, Path]) -> Path:
    """Write report.json, trace.csv and x_final.csv into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.model_dump_json(indent=2))
    report.trace_frame().to_csv(out / "trace.csv", index=False)
    write_vector_csv(out / "x_final.csv", report.x_final)
    return out


class SolveSummary(BaseModel):
    """Scalar outcome of one solve."""

    solver: str
    cost_final: float
    residual_final: Optional[float] = None
    termination: Termination
    iterations: int
    wall_ms: float


class CompareSummary(BaseModel):
    """Outcome of a matched-budget comparison of the second-order method and ADMM."""

    budget: int = Field(description="Iteration budget given to both solvers")
    gsom: SolveSummary
    admm: SolveSummary
    relative_cost_gap: float = Field(description="|cost_gsom - cost_admm| / (1 + |cost_admm|)")


def summarize(report: SolveReport) -> SolveSummary:
    return SolveSummary(**report.model_dump(include=set(SolveSummary.model_fields)))


def _carried_costs(report: SolveReport, budget: int) -> np.ndarray:
    """Per-iteration cost, the last value carried forward once the solver has stopped."""
    costs = report.costs()[:budget]
    if costs.size == 0:
        return np.full(budget, report.cost_final)
    return np.concatenate([costs, np.full(budget - costs.size, costs[-1])])


def write_compare(gsom: SolveReport, admm: SolveReport, budget: int, out_dir: Union[str, Path]) -> CompareSummary:
    """Write compare.csv (iter, cost_gsom, cost_admm) and compare_summary.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        {
            "iter": np.arange(1, budget + 1),
            "cost_gsom": _carried_costs(gsom, budget),
            "cost_admm": _carried_costs(admm, budget),
        }
    )
    frame.to_csv(out / "compare.csv", index=False)
    summary = CompareSummary(
        budget=budget,
        gsom=summarize(gsom),
        admm=summarize(admm),
        relative_cost_gap=abs(gsom.cost_final - admm.cost_final) / (1.0 + abs(admm.cost_final)),
    )
    (out / "compare_summary.json").write_text(summary.model_dump_json(indent=2))
    return summary
