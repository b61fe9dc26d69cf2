"""Registry mapping suite names to benchmark suites."""

from typing import Dict, List, Optional, Type, Union

from src.bench.base import BenchmarkSuite
from src.bench.suites import ActiveSetSuite, BlockJacobiSuite, GammaSweepSuite, LinsolveSuite
from src.core.constants import BenchSuite
from src.core.exceptions import UnknownSuiteError
from src.problems.factory import ProblemFactory
from src.schemas.config import RunConfig
from src.utils.logger import get_logger

logger = get_logger(__name__)


class SuiteRegistry:
    """Registry for benchmark suites.

    Creates each suite on first request and caches it, so every suite shares
    one problem factory built from the run configuration.
    """

    _suites: Dict[BenchSuite, Type[BenchmarkSuite]] = {
        BenchSuite.GAMMA_SWEEP: GammaSweepSuite,
        BenchSuite.ACTIVE_SET: ActiveSetSuite,
        BenchSuite.LINSOLVE: LinsolveSuite,
        BenchSuite.BLOCK_JACOBI: BlockJacobiSuite,
    }

    def __init__(self, config: RunConfig, factory: Optional[ProblemFactory] = None):
        """Initialize the registry.

        Args:
            config: Run configuration handed to every suite
            factory: Optional problem factory shared by the suites
        """
        self.config = config
        self.factory = factory or ProblemFactory(config.base_dir)
        self._cache: Dict[BenchSuite, BenchmarkSuite] = {}

    @classmethod
    def available(cls) -> List[str]:
        """Names of all registered suites."""
        return [suite.value for suite in cls._suites]

    @staticmethod
    def resolve(name: Union[str, BenchSuite]) -> BenchSuite:
        """Suite enum for a name.

        Raises:
            UnknownSuiteError: If no suite has this name
        """
        try:
            return BenchSuite(name)
        except ValueError as e:
            raise UnknownSuiteError(
                f"unknown bench suite '{name}', expected one of {', '.join(SuiteRegistry.available())}"
            ) from e

    def get_suite(self, name: Union[str, BenchSuite]) -> BenchmarkSuite:
        """Get or create the suite with the given name.

        Raises:
            UnknownSuiteError: If no suite has this name
        """
        suite_id = self.resolve(name)
        if suite_id in self._cache:
            logger.debug(f"Retrieved cached suite {suite_id.value}")
            return self._cache[suite_id]
        suite = self._suites[suite_id](self.config, self.factory)
        self._cache[suite_id] = suite
        logger.debug(f"Created suite {suite_id.value}")
        return suite
