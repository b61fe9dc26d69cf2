from enum import Enum


class ProblemKind(str, Enum):
    """Built-in problem families."""

    QUADRATIC_TV = "quadratic_tv"
    DECONVOLUTION = "deconvolution"
    CAUCHY = "cauchy"
    GRAPH_TREND = "graph_trend"
    PROX = "prox"


class LinsolveKind(str, Enum):
    """Linear solvers available for the second-order system."""

    AUTO = "auto"
    DIRECT = "direct"
    PCG = "pcg"
    GMRES = "gmres"
    BLOCK_JACOBI = "block_jacobi"


class SolverUsed(str, Enum):
    """Solver that actually produced a direction."""

    DIRECT = "direct"
    PCG = "pcg"
    GMRES = "gmres"
    BLOCK_JACOBI = "block_jacobi"
    NONE = "none"


class PreconditionerKind(str, Enum):
    """Preconditioners for the iterative solvers."""

    JACOBI = "jacobi"
    ILU = "ilu"


class BlockJacobiMode(str, Enum):
    """How the block-Jacobi operator is iterated."""

    RICHARDSON = "richardson"
    KRYLOV = "krylov"


class SlopeKind(str, Enum):
    """Vector used in the sufficient-decrease test of the line search."""

    TILDE = "tilde"
    MINNORM = "minnorm"


class Termination(str, Enum):
    """Reasons a solve stops."""

    RESIDUAL_SMALL = "ResidualSmall"
    STEP_SMALL = "StepSmall"
    COST_SMALL = "CostSmall"
    MAX_ITER = "MaxIter"
    STALLED = "Stalled"


class BenchSuite(str, Enum):
    """Benchmark suites of the bench command."""

    GAMMA_SWEEP = "gamma_sweep"
    ACTIVE_SET = "active_set"
    LINSOLVE = "linsolve"
    BLOCK_JACOBI = "block_jacobi"


# Trace CSV column order
TRACE_COLUMNS = [
    "iter",
    "cost",
    "residual",
    "step",
    "n_active",
    "n_signchange",
    "n_frozen",
    "qp_iters",
    "lin_residual",
    "wall_ms",
]
