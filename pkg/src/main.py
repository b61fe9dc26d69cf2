"""Command-line entry point: solve, compare and bench."""

import argparse
import sys
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

from src.baselines.admm import admm_solve
from src.bench import SuiteRegistry, iteration_capped
from src.core import settings
from src.core.constants import Termination
from src.core.exceptions import ComposaError, NonQuadraticSmoothPartError
from src.gsom.solver import gsom_solve, residual_threshold
from src.problems.base import eval_cost
from src.problems.factory import ProblemFactory
from src.schemas.config import RunConfig, load_run_config
from src.schemas.report import write_compare, write_report
from src.utils.logger import configure_logging, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STALLED = 2

DEFAULT_COMPARE_ITERS = 50


def _exit_code(termination: Termination) -> int:
    return EXIT_STALLED if termination == Termination.STALLED else EXIT_OK


def _out_dir(args: argparse.Namespace, config: RunConfig) -> Path:
    return Path(args.out) if args.out else config.output.dir


def cmd_solve(args: argparse.Namespace) -> int:
    """Build the configured problem, run the second-order method and write the report files."""
    config = load_run_config(args.config, args.overrides)
    instance = ProblemFactory(config.base_dir).create(config.problem)
    report = gsom_solve(instance.spec, instance.x0, config.solver)
    out = write_report(report, _out_dir(args, config))
    logger.info(f"Wrote report to {out}")
    return _exit_code(report.termination)


def cmd_compare(args: argparse.Namespace) -> int:
    """Run the second-order method and ADMM with the same iteration budget."""
    config = load_run_config(args.config, args.overrides)
    instance = ProblemFactory(config.base_dir).create(config.problem)
    if not instance.spec.smooth.is_quadratic:
        raise NonQuadraticSmoothPartError(
            f"compare needs a quadratic smooth part; {config.problem.kind.value} has none"
        )
    budget = args.iters
    gsom = gsom_solve(instance.spec, instance.x0, iteration_capped(config.solver, budget))
    admm = admm_solve(instance.spec, config.admm.model_copy(update={"maxit": budget}), x0=instance.x0)
    out = _out_dir(args, config)
    summary = write_compare(gsom, admm, budget, out)
    logger.info(
        f"Compared over {budget} iterations: gsom {summary.gsom.cost_final:.10e}, "
        f"admm {summary.admm.cost_final:.10e}; written to {out}"
    )
    if gsom.termination == Termination.STALLED:
        # capped tolerances turn any stall into Stalled; judge it against the configured ones
        threshold = residual_threshold(eval_cost(instance.spec, instance.x0), config.solver)
        if gsom.residual_final <= config.solver.linesearch.stall_residual_factor * threshold:
            return EXIT_OK
    return _exit_code(gsom.termination)


def cmd_bench(args: argparse.Namespace) -> int:
    """Run one benchmark suite and write its tables."""
    suite_id = SuiteRegistry.resolve(args.suite)
    config = load_run_config(args.config, args.overrides)
    suite = SuiteRegistry(config).get_suite(suite_id)
    result = suite.run(_out_dir(args, config), repeats=args.repeats)
    logger.info(f"Bench {result.suite.value}: {result.table_path}, {result.summary_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="composa", description="Second-order solver for f(x) + beta*||Cx||_1")
    commands = parser.add_subparsers(dest="command", required=True)

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("config", type=Path, help="TOML run configuration")
        sub.add_argument("--out", help="Output directory, overrides output.dir")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="Override one configuration value; repeatable",
        )

    solve = commands.add_parser("solve", help="Solve the configured problem")
    common(solve)
    solve.set_defaults(handler=cmd_solve)

    compare = commands.add_parser("compare", help="Compare against ADMM with a matched iteration budget")
    common(compare)
    compare.add_argument("--iters", type=int, default=DEFAULT_COMPARE_ITERS, help="Iteration budget of both solvers")
    compare.set_defaults(handler=cmd_compare)

    bench = commands.add_parser("bench", help="Run a benchmark suite")
    bench.add_argument("suite", help=f"One of: {', '.join(SuiteRegistry.available())}")
    common(bench)
    bench.add_argument("--repeats", type=int, default=None, help="Repetitions, overrides bench.repeats")
    bench.set_defaults(handler=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run the command and map the outcome to an exit code.

    Returns:
        0 on a clean termination, 2 when the solver stalled, 1 on any error
    """
    configure_logging(settings)
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    if getattr(args, "iters", 1) < 1 or (getattr(args, "repeats", None) or 1) < 1:
        print("composa: error: --iters and --repeats must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.handler(args)
    except (ComposaError, ValidationError, OSError) as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"composa: error: {e}", file=sys.stderr)
        return EXIT_ERROR


def run(argv: Optional[List[str]] = None) -> None:
    """Console-script wrapper that exits with the command's code."""
    sys.exit(main(argv))


if __name__ == "__main__":
    run()
