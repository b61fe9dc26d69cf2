"""Base class and result model of the benchmark suites."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, Union

import numpy as np
import pandas as pd
import ray
from pydantic import BaseModel, Field

from src.core import settings
from src.core.constants import BenchSuite
from src.core.solver_settings import SolverConfig
from src.problems.factory import ProblemFactory, ProblemInstance
from src.schemas.config import RunConfig
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Stopping tolerances of iteration-cap runs; only max_iter (or a stall) ends them
_CAPPED_TOL = 1e-300


class BenchResult(BaseModel):
    """Files written by a suite and the aggregated numbers behind them."""

    suite: BenchSuite
    repeats: int
    table_path: Path = Field(description="Main CSV table")
    summary_path: Path = Field(description="JSON with medians and variances over the repeats")
    extra_paths: List[Path] = Field(default_factory=list, description="Companion tables")
    table: List[Dict[str, Any]] = Field(default_factory=list, description="Rows of the main table")
    summary: List[Dict[str, Any]] = Field(default_factory=list, description="Median and variance per measured cell")


def iteration_capped(cfg: SolverConfig, iterations: int) -> SolverConfig:
    """Copy of cfg that runs exactly `iterations` iterations unless the line search stalls."""
    return cfg.model_copy(
        update={"max_iter": iterations, "tol_residual": _CAPPED_TOL, "tol_x": _CAPPED_TOL, "tol_f": _CAPPED_TOL}
    )


def _measure_repeat(suite_cls: Type["BenchmarkSuite"], config: RunConfig, repeat: int) -> pd.DataFrame:
    return suite_cls(config).measure(repeat)


class BenchmarkSuite(ABC):
    """One benchmark: measure once per repeat, then aggregate into tables.

    Subclasses set ``name``, the grouping ``keys`` and the ``metrics`` that the
    summary reports, and implement ``measure`` and ``table``.
    """

    name: BenchSuite
    keys: Tuple[str, ...] = ()
    metrics: Tuple[str, ...] = ()

    def __init__(self, config: RunConfig, factory: Optional[ProblemFactory] = None):
        """Initialize the suite.

        Args:
            config: Run configuration; its [bench] section parametrizes the suite
            factory: Problem factory, one resolving against config.base_dir when omitted
        """
        self.config = config
        self.factory = factory or ProblemFactory(config.base_dir)

    def instance(self, **updates: Any) -> ProblemInstance:
        """Problem of the run config with some fields replaced."""
        return self.factory.create(self.config.problem.model_copy(update=updates))

    @abstractmethod
    def measure(self, repeat: int) -> pd.DataFrame:
        """Raw measurements of one repeat, one row per sample, with a 'repeat' column."""

    @abstractmethod
    def table(self, samples: pd.DataFrame) -> pd.DataFrame:
        """Main table from the samples of all repeats."""

    def extra_tables(self, samples: pd.DataFrame) -> Dict[str, pd.DataFrame]:
        """Companion tables keyed by file name."""
        return {}

    def summarize(self, samples: pd.DataFrame) -> List[Dict[str, Any]]:
        """Median and population variance of every metric per key combination."""
        if samples.empty:
            return []
        grouped = samples.groupby(list(self.keys), sort=False)[list(self.metrics)]
        medians, variances = grouped.median(), grouped.var(ddof=0)
        rows = []
        for key in medians.index:
            key_values = key if isinstance(key, tuple) else (key,)
            row: Dict[str, Any] = {k: _plain(v) for k, v in zip(self.keys, key_values)}
            row["median"] = {m: _plain(medians.loc[key, m]) for m in self.metrics}
            row["variance"] = {m: _plain(variances.loc[key, m]) for m in self.metrics}
            rows.append(row)
        return rows

    def collect(self, repeats: int) -> pd.DataFrame:
        """Samples of all repeats, as ray tasks when bench.parallel is set."""
        if self.config.bench.parallel and repeats > 1:
            if not ray.is_initialized():
                ray.init(address=settings.runtime.ray_address, ignore_reinit_error=True, log_to_driver=False)
            task = ray.remote(_measure_repeat)
            frames = ray.get([task.remote(type(self), self.config, k) for k in range(repeats)])
        else:
            frames = [self.measure(k) for k in range(repeats)]
        return pd.concat(frames, ignore_index=True)

    def run(self, out_dir: Union[str, Path], repeats: Optional[int] = None) -> BenchResult:
        """Measure, aggregate and write `<suite>.csv` and `<suite>_summary.json`.

        Args:
            out_dir: Output directory, created when missing
            repeats: Repetitions, bench.repeats when omitted

        Returns:
            BenchResult describing the written files
        """
        repeats = repeats or self.config.bench.repeats
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        logger.info(f"Bench {self.name.value} started: {repeats} repeats")

        samples = self.collect(repeats)
        table = self.table(samples)
        table_path = out / f"{self.name.value}.csv"
        table.to_csv(table_path, index=False)

        extra_paths = []
        for file_name, frame in self.extra_tables(samples).items():
            path = out / file_name
            frame.to_csv(path, index=False)
            extra_paths.append(path)

        result = BenchResult(
            suite=self.name,
            repeats=repeats,
            table_path=table_path,
            summary_path=out / f"{self.name.value}_summary.json",
            extra_paths=extra_paths,
            table=[{k: _plain(v) for k, v in row.items()} for row in table.to_dict(orient="records")],
            summary=self.summarize(samples),
        )
        result.summary_path.write_text(result.model_dump_json(indent=2))
        logger.info(f"Bench {self.name.value} written to {table_path}")
        return result


def _plain(value: Any) -> Any:
    """numpy scalars to Python scalars, NaN to None."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and np.isnan(value):
        return None
    return value
