from src.core.app_settings import AppSettings, settings
from src.core.constants import (
    BenchSuite,
    BlockJacobiMode,
    LinsolveKind,
    PreconditionerKind,
    ProblemKind,
    SlopeKind,
    SolverUsed,
    Termination,
)
from src.core.solver_settings import (
    AdmmSettings,
    GammaWarmupSettings,
    LinesearchSettings,
    LinsolveSettings,
    SolverConfig,
    SubproblemSettings,
)

__all__ = [
    "AdmmSettings",
    "AppSettings",
    "BenchSuite",
    "BlockJacobiMode",
    "GammaWarmupSettings",
    "LinesearchSettings",
    "LinsolveKind",
    "LinsolveSettings",
    "PreconditionerKind",
    "ProblemKind",
    "SlopeKind",
    "SolverConfig",
    "SolverUsed",
    "SubproblemSettings",
    "Termination",
    "settings",
]
