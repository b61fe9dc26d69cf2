"""Benchmark suites: Huber parameter sweep, active-set reduction, linear solvers and block-Jacobi."""

from typing import Any, Dict, List

import numpy as np
import pandas as pd

from src.bench.base import BenchmarkSuite, iteration_capped
from src.core.constants import BenchSuite, LinsolveKind
from src.core.solver_settings import LinsolveSettings
from src.gsom.direction import factor_storage_kb, solve_direction
from src.gsom.solver import IterationContext, gsom_solve
from src.utils.logger import get_logger

logger = get_logger(__name__)

# Iterates whose systems the linsolve suite times
_LINSOLVE_SAMPLES = 5

_FULL = "full"
_REDUCED = "reduced"


class GammaSweepSuite(BenchmarkSuite):
    """Final cost after a fixed number of iterations for every (gamma, beta) pair.

    The main table has one row per gamma and one column per beta.
    """

    name = BenchSuite.GAMMA_SWEEP
    keys = ("gamma", "beta")
    metrics = ("cost", "wall_ms")

    def measure(self, repeat: int) -> pd.DataFrame:
        bench = self.config.bench
        base = iteration_capped(self.config.solver, bench.iterations)
        rows = []
        for beta in bench.betas:
            instance = self.instance(beta=beta)
            for gamma in bench.gammas:
                report = gsom_solve(instance.spec, instance.x0, base.model_copy(update={"gamma": gamma}))
                rows.append(
                    {
                        "repeat": repeat,
                        "gamma": gamma,
                        "beta": beta,
                        "cost": report.cost_final,
                        "iterations": report.iterations,
                        "wall_ms": report.wall_ms,
                    }
                )
                logger.debug(f"gamma={gamma} beta={beta}: cost={report.cost_final:.6e} ({report.iterations} iters)")
        return pd.DataFrame(rows)

    def table(self, samples: pd.DataFrame) -> pd.DataFrame:
        pivot = samples.pivot_table(index="gamma", columns="beta", values="cost", aggfunc="median")
        pivot = pivot.reindex(index=self.config.bench.gammas, columns=self.config.bench.betas)
        pivot.columns = [f"beta={beta:g}" for beta in pivot.columns]
        return pivot.reset_index()


class ActiveSetSuite(BenchmarkSuite):
    """Direction solve time on the reduced versus the full system at the same iterates.

    Only iterations freezing at least bench.frozen_fraction of the coordinates
    are timed. Both solves run on the system the solver built, so they share
    its assembled matrix.
    """

    name = BenchSuite.ACTIVE_SET
    keys = ("variant",)
    metrics = ("ms",)

    def measure(self, repeat: int) -> pd.DataFrame:
        bench = self.config.bench
        cfg = iteration_capped(self.config.solver, bench.iterations).model_copy(
            update={"active_set_reduction": True}
        )
        instance = self.instance()
        threshold = bench.frozen_fraction * instance.spec.dim
        rows: List[Dict[str, Any]] = []

        def observe(ctx: IterationContext) -> None:
            split = ctx.split
            if split is None or split.frozen.size < threshold or split.free.size == 0:
                return
            residual = ctx.state.residual
            reduced = solve_direction(ctx.system, residual, split, cfg.linsolve)
            full = solve_direction(ctx.system, residual, None, cfg.linsolve)
            for variant, result in ((_REDUCED, reduced), (_FULL, full)):
                rows.append(
                    {
                        "repeat": repeat,
                        "iteration": ctx.iteration,
                        "variant": variant,
                        "ms": result.wall_ms,
                        "n_frozen": int(split.frozen.size),
                        "m": instance.spec.dim,
                    }
                )

        gsom_solve(instance.spec, instance.x0, cfg, observer=observe)
        if not rows:
            logger.warning(f"No iteration froze at least {bench.frozen_fraction:.0%} of the coordinates")
        return pd.DataFrame(rows, columns=["repeat", "iteration", "variant", "ms", "n_frozen", "m"])

    def table(self, samples: pd.DataFrame) -> pd.DataFrame:
        rows = []
        for variant in (_REDUCED, _FULL):
            times = samples.loc[samples["variant"] == variant, "ms"]
            rows.append(
                {
                    "variant": variant,
                    "mean_ms": times.mean(),
                    "median_ms": times.median(),
                    "variance": times.var(ddof=0),
                    "samples": int(times.size),
                }
            )
        table = pd.DataFrame(rows)
        full_median = table.loc[table["variant"] == _FULL, "median_ms"].iloc[0]
        table["ratio"] = table["median_ms"] / full_median if full_median > 0 else np.nan
        return table


class LinsolveSuite(BenchmarkSuite):
    """Time of each linear solver on the systems of the first iterations, per grid size.

    Cells read 'mean±variance' in seconds with solvers as rows and m as columns.
    """

    name = BenchSuite.LINSOLVE
    keys = ("solver", "m")
    metrics = ("seconds",)

    def _settings_for(self, kind: LinsolveKind, m: int) -> LinsolveSettings:
        base = self.config.solver.linsolve
        update: Dict[str, Any] = {"kind": kind}
        if kind == LinsolveKind.DIRECT:
            update["dense_limit"] = max(base.dense_limit, m)
        return base.model_copy(update=update)

    def measure(self, repeat: int) -> pd.DataFrame:
        bench = self.config.bench
        cfg = iteration_capped(self.config.solver, _LINSOLVE_SAMPLES)
        rows = []
        for grid_n in bench.grid_sizes:
            instance = self.instance(grid_n=grid_n)
            m = instance.spec.dim
            captured: List[IterationContext] = []
            gsom_solve(instance.spec, instance.x0, cfg, observer=captured.append)
            for ctx in captured:
                if ctx.system.can_assemble:
                    _ = ctx.system.assembled  # assembled once, outside the timed solves
                for kind in bench.linsolve_kinds:
                    result = solve_direction(ctx.system, ctx.state.residual, None, self._settings_for(kind, m))
                    rows.append(
                        {
                            "repeat": repeat,
                            "m": m,
                            "solver": kind.value,
                            "iteration": ctx.iteration,
                            "seconds": result.wall_ms / 1e3,
                            "converged": result.converged,
                        }
                    )
            logger.debug(f"linsolve m={m}: timed {len(captured)} systems")
        return pd.DataFrame(rows)

    def table(self, samples: pd.DataFrame) -> pd.DataFrame:
        stats = samples.groupby(["solver", "m"])["seconds"].agg(mean="mean", variance=lambda s: s.var(ddof=0))
        sizes = sorted(samples["m"].unique())
        rows = []
        for kind in self.config.bench.linsolve_kinds:
            row: Dict[str, Any] = {"solver": kind.value}
            for m in sizes:
                mean, variance = stats.loc[(kind.value, m)]
                row[f"m={m}"] = f"{mean:.4e}±{variance:.2e}"
            rows.append(row)
        return pd.DataFrame(rows)


class BlockJacobiSuite(BenchmarkSuite):
    """Full direct solve against block-Jacobi with each configured partition count.

    Reports the largest factored block, factor storage, direction time and the
    final cost gap to the full-solve run. The companion table holds the
    direction time of every iteration per variant.
    """

    name = BenchSuite.BLOCK_JACOBI
    keys = ("variant",)
    metrics = ("direction_ms", "final_cost")

    def _variants(self) -> Dict[str, LinsolveSettings]:
        base = self.config.solver.linsolve
        variants = {_FULL: base.model_copy(update={"kind": LinsolveKind.DIRECT})}
        for p in self.config.bench.partitions:
            variants[f"p={p}"] = base.model_copy(update={"kind": LinsolveKind.BLOCK_JACOBI, "partitions": p})
        return variants

    def measure(self, repeat: int) -> pd.DataFrame:
        instance = self.instance()
        m = instance.spec.dim
        base = iteration_capped(self.config.solver, self.config.bench.iterations)
        direct = base.linsolve.model_copy(update={"kind": LinsolveKind.DIRECT})
        frames = []
        for variant, linsolve in self._variants().items():
            rows: List[Dict[str, Any]] = []

            def observe(ctx: IterationContext, variant: str = variant, rows: List[Dict[str, Any]] = rows) -> None:
                result = ctx.direction
                row: Dict[str, Any] = {
                    "repeat": repeat,
                    "variant": variant,
                    "iteration": ctx.iteration,
                    "m": m,
                    "direction_ms": result.wall_ms,
                    "max_block_size": result.max_block_size or m,
                    "storage_kb": result.factor_storage_kb,
                    "direction_gap": np.nan,
                }
                if ctx.iteration == 0:
                    if variant == _FULL:
                        row["storage_kb"] = factor_storage_kb(ctx.system.assembled)
                    else:
                        reference = solve_direction(ctx.system, ctx.state.residual, None, direct).d
                        scale = max(float(np.linalg.norm(reference)), np.finfo(float).tiny)
                        row["direction_gap"] = float(np.linalg.norm(result.d - reference)) / scale
                rows.append(row)

            report = gsom_solve(instance.spec, instance.x0, base.model_copy(update={"linsolve": linsolve}), observe)
            frame = pd.DataFrame(rows)
            frame["final_cost"] = report.cost_final
            frame["iterations"] = report.iterations
            frames.append(frame)
            logger.debug(f"block_jacobi {variant}: cost={report.cost_final:.10e} after {report.iterations} iterations")
        return pd.concat(frames, ignore_index=True)

    def table(self, samples: pd.DataFrame) -> pd.DataFrame:
        grouped = samples.groupby("variant", sort=False)
        table = grouped.agg(
            m=("m", "first"),
            max_block_size=("max_block_size", "max"),
            storage_kb=("storage_kb", "max"),
            direction_ms=("direction_ms", "mean"),
            iterations=("iterations", "max"),
            final_cost=("final_cost", "median"),
            direction_gap=("direction_gap", "max"),
        ).reset_index()
        full = table.loc[table["variant"] == _FULL, "final_cost"]
        full_cost = full.iloc[0] if not full.empty else np.nan
        table["cost_gap"] = (table["final_cost"] - full_cost).abs() / max(abs(full_cost), np.finfo(float).tiny)
        return table

    def extra_tables(self, samples: pd.DataFrame) -> Dict[str, pd.DataFrame]:
        per_iteration = samples.pivot_table(
            index="iteration", columns="variant", values="direction_ms", aggfunc="median", sort=False
        )
        per_iteration = per_iteration.reindex(columns=list(self._variants()))
        per_iteration.columns = [f"{variant}_ms" for variant in per_iteration.columns]
        return {"block_jacobi_iterations.csv": per_iteration.reset_index()}
