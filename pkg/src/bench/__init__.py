"""Benchmark suites timing the solver variants on local hardware."""

from src.bench.base import BenchmarkSuite, BenchResult, iteration_capped
from src.bench.registry import SuiteRegistry
from src.bench.suites import ActiveSetSuite, BlockJacobiSuite, GammaSweepSuite, LinsolveSuite

__all__ = [
    "ActiveSetSuite",
    "BenchResult",
    "BenchmarkSuite",
    "BlockJacobiSuite",
    "GammaSweepSuite",
    "LinsolveSuite",
    "SuiteRegistry",
    "iteration_capped",
]
