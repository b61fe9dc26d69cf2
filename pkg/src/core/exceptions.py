"""Exception hierarchy for the composite sparse solver."""

from typing import Optional

import numpy as np


class ComposaError(Exception):
    """Base class for all errors raised by this package."""


class ConstructionError(ComposaError):
    """Raised when a matrix or problem cannot be built from its inputs."""


class DimensionMismatchError(ComposaError):
    """Raised when operand shapes do not conform."""


class NotPositiveDefiniteError(ComposaError):
    """Raised when a Cholesky factorization meets a non-positive pivot."""

    def __init__(self, message: str, pivot_index: Optional[int] = None):
        super().__init__(message)
        self.pivot_index = pivot_index


class EvaluationError(ComposaError):
    """Raised when the smooth part returns NaN or Inf."""

    def __init__(self, message: str, x: np.ndarray, iteration: Optional[int] = None):
        super().__init__(message)
        self.x = np.array(x, copy=True)
        self.iteration = iteration

    def with_iteration(self, iteration: int) -> "EvaluationError":
        """Return a copy of this error tagged with the iteration it occurred at."""
        return EvaluationError(f"iteration {iteration}: {self}", self.x, iteration)


class NonQuadraticSmoothPartError(ComposaError):
    """Raised when a quadratic smooth part is required but not available."""


class DirectionError(ComposaError):
    """Raised when the second-order system cannot be solved at all."""


class ConfigError(ComposaError):
    """Raised for malformed or inconsistent configuration."""

    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class UnknownSuiteError(ComposaError):
    """Raised when a benchmark suite name is not registered."""
