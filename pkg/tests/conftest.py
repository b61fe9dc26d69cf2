from pathlib import Path
from typing import Callable

import numpy as np
import pytest
import scipy.sparse as sp

from src.problems.base import ProblemSpec
from src.problems.builders import build_prox_instance, build_quadratic_tv
from src.problems.smooth import QuadraticSmooth


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def scalar_prox() -> ProblemSpec:
    """argmin 1/2 (x - 3)^2 + |x|, solved by x = 2."""
    return build_prox_instance(np.array([3.0]), sp.identity(1, format="csr"), 1.0)


@pytest.fixture
def small_tv() -> ProblemSpec:
    return build_quadratic_tv(8, 100.0, 0.5)


@pytest.fixture
def fused_three() -> ProblemSpec:
    """1/2 ||x - (0, 0, 5)||^2 + |x1 - x2| + |x2 - x3|, minimized by (0.5, 0.5, 4)."""
    C = sp.csr_matrix(np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]]))
    return ProblemSpec.create(QuadraticSmooth.distance_to(np.array([0.0, 0.0, 5.0])), C, 1.0)


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[[str], Path]:
    """Write TOML text to a config file inside tmp_path and return its path."""

    def _write(text: str, name: str = "run.toml") -> Path:
        path = tmp_path / name
        path.write_text(text)
        return path

    return _write
