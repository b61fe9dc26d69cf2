"""Factory turning a problem configuration into a ready-to-solve instance."""

from pathlib import Path
from typing import Any, Callable, Dict, Optional

import numpy as np
import scipy.sparse as sp
from pydantic import BaseModel, ConfigDict, Field

from src.core.constants import ProblemKind
from src.core.exceptions import DimensionMismatchError
from src.problems.base import ProblemSpec
from src.problems.builders import (
    build_cauchy_denoise,
    build_deconvolution,
    build_graph_trend,
    build_prox_instance,
    build_quadratic_tv,
)
from src.problems.data import (
    blocky_image,
    cauchy_noise,
    gaussian_noise,
    piecewise_constant_signal,
    random_convolution_matrix,
)
from src.problems.operators import grid_graph_edges
from src.schemas.config import ProblemConfig
from src.utils.io import read_edge_list, read_matrix_market, read_vector_csv
from src.utils.logger import get_logger

logger = get_logger(__name__)


class ProblemInstance(BaseModel):
    """A problem together with its default starting point."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: ProblemSpec
    x0: np.ndarray = Field(description="Default starting point")
    ground_truth: Optional[np.ndarray] = Field(default=None, description="Clean signal of synthetic instances")
    meta: Dict[str, Any] = Field(default_factory=dict)


class ProblemFactory:
    """Builds problem instances from configuration.

    Data paths are resolved against ``base_dir``; missing paths mean
    synthetic data seeded by ``config.seed``.
    """

    def __init__(self, base_dir: Path = Path(".")):
        self.base_dir = Path(base_dir)
        self._builders: Dict[ProblemKind, Callable[[ProblemConfig], ProblemInstance]] = {
            ProblemKind.QUADRATIC_TV: self._quadratic_tv,
            ProblemKind.DECONVOLUTION: self._deconvolution,
            ProblemKind.CAUCHY: self._cauchy,
            ProblemKind.GRAPH_TREND: self._graph_trend,
            ProblemKind.PROX: self._prox,
        }

    def _path(self, path: Optional[Path]) -> Optional[Path]:
        if path is None:
            return None
        return path if path.is_absolute() else self.base_dir / path

    def create(self, config: ProblemConfig) -> ProblemInstance:
        """Build the instance described by config.

        Raises:
            ConfigError: If a referenced file does not exist
            ConstructionError: If the data cannot form a valid problem
        """
        instance = self._builders[config.kind](config)
        x0_path = self._path(config.x0_path)
        if x0_path is not None:
            x0 = read_vector_csv(x0_path)
            if x0.shape != (instance.spec.dim,):
                raise DimensionMismatchError(f"x0 has length {x0.shape[0]}, problem dimension is {instance.spec.dim}")
            instance = instance.model_copy(update={"x0": x0})
        logger.info(f"Created {config.kind.value} instance: m={instance.spec.dim}, n={instance.spec.n_rows}")
        return instance

    def _quadratic_tv(self, config: ProblemConfig) -> ProblemInstance:
        spec = build_quadratic_tv(config.grid_n, config.forcing, config.beta)
        return ProblemInstance(spec=spec, x0=np.zeros(spec.dim), meta=spec.meta)

    def _deconvolution(self, config: ProblemConfig) -> ProblemInstance:
        m = config.grid_n * config.grid_n
        truth = None
        matrix_path = self._path(config.matrix_path)
        if matrix_path is not None:
            A: Any = read_matrix_market(matrix_path)
        else:
            A = random_convolution_matrix(config.n_obs or m, m, config.seed)
        signal_path = self._path(config.signal_path)
        if signal_path is not None:
            y = read_vector_csv(signal_path)
        else:
            truth = blocky_image(config.grid_n)
            y = gaussian_noise(np.asarray(A @ truth), config.noise_sigma, config.seed + 1)
        edges_path = self._path(config.edges_path)
        edges = read_edge_list(edges_path) if edges_path is not None else grid_graph_edges(config.grid_n, config.grid_n)
        spec = build_deconvolution(A, y, config.alpha, config.beta, edges)
        return ProblemInstance(spec=spec, x0=np.zeros(spec.dim), ground_truth=truth, meta=spec.meta)

    def _cauchy(self, config: ProblemConfig) -> ProblemInstance:
        truth = None
        signal_path = self._path(config.signal_path)
        if signal_path is not None:
            f_obs = read_vector_csv(signal_path)
        else:
            truth = blocky_image(config.grid_n)
            f_obs = cauchy_noise(truth, config.noise_level, config.seed)
        spec = build_cauchy_denoise(f_obs, config.a, config.beta, config.grid_n)
        return ProblemInstance(spec=spec, x0=f_obs.copy(), ground_truth=truth, meta=spec.meta)

    def _graph_trend(self, config: ProblemConfig) -> ProblemInstance:
        truth = None
        edges_path = self._path(config.edges_path)
        if edges_path is not None:
            edges = read_edge_list(edges_path)
        else:
            edges = grid_graph_edges(config.graph_rows, config.graph_cols)
        signal_path = self._path(config.signal_path)
        if signal_path is not None:
            y = read_vector_csv(signal_path)
        else:
            truth = piecewise_constant_signal(config.graph_rows, config.graph_cols)
            y = gaussian_noise(truth, config.noise_sigma, config.seed)
        spec = build_graph_trend(edges, y, config.beta1, config.beta2, config.order)
        return ProblemInstance(spec=spec, x0=np.zeros(spec.dim), ground_truth=truth, meta=spec.meta)

    def _prox(self, config: ProblemConfig) -> ProblemInstance:
        signal_path = self._path(config.signal_path)
        if config.xhat is not None:
            xhat = np.asarray(config.xhat, dtype=np.float64)
        elif signal_path is not None:
            xhat = read_vector_csv(signal_path)
        else:
            xhat = 2.0 * np.random.default_rng(config.seed).standard_normal(config.size)
        matrix_path = self._path(config.matrix_path)
        C = read_matrix_market(matrix_path) if matrix_path is not None else sp.identity(xhat.size, format="csr")
        spec = build_prox_instance(xhat, C, config.alpha)
        return ProblemInstance(spec=spec, x0=np.zeros(spec.dim), meta=spec.meta)
