"""Generalized second-order method for composite sparse problems."""

from src.gsom.curvature import (
    HuberOperator,
    SystemOperator,
    assemble_system,
    build_huber_operator,
    huber_grad_scalar,
    huber_penalty_grad,
    huber_penalty_value,
    huber_value,
)
from src.gsom.direction import ActiveSplit, DirectionResult, block_jacobi_solve, identify_active, solve_direction
from src.gsom.geometry import (
    LineSearchResult,
    SignChangeSet,
    interior_active_rows,
    project_onto_AS,
    projected_linesearch,
    sign_change_set,
)
from src.gsom.solver import GsomSolver, IterationContext, IterationSnapshot, check_stop, gsom_solve
from src.gsom.subgradient import IndexPartition, SubgradientState, classify_indices, min_norm_subgradient, tilde_grad

__all__ = [
    "ActiveSplit",
    "DirectionResult",
    "GsomSolver",
    "HuberOperator",
    "IndexPartition",
    "IterationContext",
    "IterationSnapshot",
    "LineSearchResult",
    "SignChangeSet",
    "SubgradientState",
    "SystemOperator",
    "assemble_system",
    "block_jacobi_solve",
    "build_huber_operator",
    "check_stop",
    "classify_indices",
    "gsom_solve",
    "huber_grad_scalar",
    "huber_penalty_grad",
    "huber_penalty_value",
    "huber_value",
    "identify_active",
    "interior_active_rows",
    "min_norm_subgradient",
    "project_onto_AS",
    "projected_linesearch",
    "sign_change_set",
    "solve_direction",
    "tilde_grad",
]
