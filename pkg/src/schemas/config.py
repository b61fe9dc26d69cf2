"""Run configuration: TOML file plus dotted command-line overrides."""

import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from src.core.constants import LinsolveKind, ProblemKind
from src.core.exceptions import ConfigError
from src.core.solver_settings import AdmmSettings, SolverConfig
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Top-level TOML sections nested under [solver] in the model
_SOLVER_SUBSECTIONS = ("linsolve", "linesearch", "subproblem", "gamma_warmup")


class ProblemConfig(BaseModel):
    """Problem family and its data; synthetic data is generated when paths are absent."""

    kind: ProblemKind = Field(description="Problem family")
    beta: float = Field(default=0.5, ge=0, description="Penalty weight (quadratic_tv, deconvolution, cauchy)")
    grid_n: int = Field(default=32, ge=2, description="Interior grid nodes per side")
    seed: int = Field(default=0, description="Seed of the synthetic data")

    forcing: float = Field(default=100.0, description="quadratic_tv: constant forcing value")

    alpha: float = Field(default=0.0, ge=0, description="deconvolution: l1 weight; prox: penalty weight")
    n_obs: Optional[int] = Field(default=None, ge=1, description="deconvolution: synthetic observation count")
    noise_sigma: float = Field(default=0.1, ge=0, description="Gaussian noise level of synthetic observations")

    a: float = Field(default=0.5, gt=0, description="cauchy: scale parameter")
    noise_level: float = Field(default=0.01, ge=0, description="cauchy: synthetic Cauchy noise level")

    beta1: float = Field(default=1.0, ge=0, description="graph_trend: weight of the difference term")
    beta2: float = Field(default=0.1, ge=0, description="graph_trend: weight of the l1 term")
    order: int = Field(default=2, ge=1, description="graph_trend: order of the graph difference operator")
    graph_rows: int = Field(default=20, ge=1, description="graph_trend: synthetic lattice rows")
    graph_cols: int = Field(default=20, ge=1, description="graph_trend: synthetic lattice columns")

    xhat: Optional[List[float]] = Field(default=None, description="prox: inline point to be denoised")
    size: int = Field(default=10, ge=1, description="prox: synthetic dimension")

    matrix_path: Optional[Path] = Field(default=None, description="Matrix Market file: A (deconvolution) or C (prox)")
    signal_path: Optional[Path] = Field(default=None, description="CSV vector: y, f_obs or xhat")
    edges_path: Optional[Path] = Field(default=None, description="CSV edge list with header src,dst")
    x0_path: Optional[Path] = Field(default=None, description="CSV starting point")

    @model_validator(mode="after")
    def _prox_weight(self) -> "ProblemConfig":
        if self.kind == ProblemKind.PROX and self.alpha <= 0:
            raise ValueError("prox problems need alpha > 0")
        return self


class OutputSettings(BaseModel):
    """Where results go."""

    dir: Path = Field(default=Path("out"), description="Output directory, relative to the working directory")


class BenchSettings(BaseModel):
    """Parameters of the benchmark suites."""

    repeats: int = Field(default=5, ge=1, description="Repetitions aggregated into median and variance")
    parallel: bool = Field(default=False, description="Run repetitions as ray tasks")
    iterations: int = Field(default=50, ge=1, description="Iteration cap of the solver runs")
    gammas: List[float] = Field(default_factory=lambda: [0.0, 50.0, 500.0, 1000.0])
    betas: List[float] = Field(default_factory=lambda: [0.1, 0.5, 0.9])
    grid_sizes: List[int] = Field(default_factory=lambda: [40, 50, 60], description="linsolve: m = n^2")
    linsolve_kinds: List[LinsolveKind] = Field(
        default_factory=lambda: [LinsolveKind.DIRECT, LinsolveKind.PCG, LinsolveKind.GMRES]
    )
    partitions: List[int] = Field(default_factory=lambda: [3, 4], description="block_jacobi: partition counts")
    frozen_fraction: float = Field(
        default=0.3, ge=0, le=1, description="active_set: only iterations with |I0| >= fraction*m are timed"
    )


class RunConfig(BaseModel):
    """Complete configuration of one command."""

    problem: ProblemConfig
    solver: SolverConfig = Field(default_factory=SolverConfig)
    admm: AdmmSettings = Field(default_factory=AdmmSettings)
    bench: BenchSettings = Field(default_factory=BenchSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)
    base_dir: Path = Field(default=Path("."), description="Directory data paths are resolved against")


def parse_override(item: str) -> Tuple[List[str], Any]:
    """Split 'section.key=value' into its key path and a TOML-parsed value.

    Values that are not valid TOML scalars are kept as strings.
    """
    if "=" not in item:
        raise ConfigError(f"override '{item}' is not of the form key=value")
    key, raw = item.split("=", 1)
    path = [part.strip() for part in key.strip().split(".")]
    if len(path) < 2 or not all(path):
        raise ConfigError(f"override key '{key}' must be section.key")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return path, value


def apply_overrides(raw: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Set dotted keys on the raw configuration mapping."""
    for item in overrides:
        path, value = parse_override(item)
        node = raw
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"override '{item}': '{part}' is not a section")
            node = child
        node[path[-1]] = value
        logger.debug(f"Override {'.'.join(path)} = {value!r}")
    return raw


def _nest_solver_sections(raw: Dict[str, Any]) -> Dict[str, Any]:
    solver = raw.setdefault("solver", {})
    for name in _SOLVER_SUBSECTIONS:
        if name in raw:
            section = raw.pop(name)
            solver.setdefault(name, {}).update(section)
    return raw


def _line_of(text: str, section: str, key: Optional[str]) -> Optional[int]:
    """1-based line of `key` inside `[section]`, or of the section header."""
    current, header_line = None, None
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped.strip("[]").strip()
            if current == section:
                header_line = number
            continue
        if current == section and key and stripped.split("=", 1)[0].strip() == key:
            return number
    return header_line


def _validation_message(e: ValidationError, text: str) -> Tuple[str, Optional[int]]:
    first = e.errors()[0]
    loc = [str(part) for part in first["loc"]]
    if loc and loc[0] == "solver" and len(loc) > 1 and loc[1] in _SOLVER_SUBSECTIONS:
        loc = loc[1:]
    section = loc[0] if loc else ""
    key = loc[1] if len(loc) > 1 else None
    return f"{'.'.join(loc)}: {first['msg']}", _line_of(text, section, key)


def parse_run_config(text: str, overrides: Sequence[str] = (), base_dir: Path = Path(".")) -> RunConfig:
    """Parse TOML text into a validated RunConfig.

    Raises:
        ConfigError: For TOML syntax errors or invalid values, with the line number when known
    """
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(str(e), getattr(e, "lineno", None)) from e
    raw = _nest_solver_sections(apply_overrides(raw, overrides))
    raw["base_dir"] = base_dir
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        message, line = _validation_message(e, text)
        raise ConfigError(message, line) from e


def load_run_config(path: Path, overrides: Sequence[str] = ()) -> RunConfig:
    """Read and validate a run configuration file.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    config = parse_run_config(path.read_text(), overrides, base_dir=path.resolve().parent)
    logger.info(f"Loaded config {path} (problem {config.problem.kind.value})")
    return config
