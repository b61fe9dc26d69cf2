"""File formats: Matrix Market matrices, single-column CSV vectors, edge lists."""

from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
import pandas as pd
import scipy.io
import scipy.sparse as sp

from src.core.exceptions import ConfigError
from src.linalg.sparse import canonical
from src.utils.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def read_matrix_market(path: PathLike) -> sp.csr_matrix:
    """Read a coordinate Matrix Market file (1-based on disk) as canonical CSR."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"matrix file not found: {path}")
    M = scipy.io.mmread(str(path))
    if not sp.issparse(M):
        M = sp.csr_matrix(np.asarray(M, dtype=np.float64))
    logger.info(f"Read {M.shape[0]}x{M.shape[1]} matrix from {path}")
    return canonical(M)


def write_matrix_market(path: PathLike, M: sp.spmatrix) -> None:
    """Write a sparse matrix in coordinate Matrix Market format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(M))


def read_vector_csv(path: PathLike) -> np.ndarray:
    """Read a single-column CSV vector with a header row."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"vector file not found: {path}")
    frame = pd.read_csv(path)
    if frame.shape[1] != 1:
        raise ConfigError(f"{path}: expected one column, found {frame.shape[1]}")
    return frame.iloc[:, 0].to_numpy(dtype=np.float64)


def write_vector_csv(path: PathLike, values: np.ndarray, name: str = "value") -> None:
    """Write a vector as a single-column CSV with a header row."""
    pd.DataFrame({name: np.asarray(values, dtype=np.float64)}).to_csv(path, index=False, float_format="%.17g")


def read_edge_list(path: PathLike) -> List[Tuple[int, int]]:
    """Read a `src,dst` CSV of 0-based edges, keeping file order."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"edge list not found: {path}")
    frame = pd.read_csv(path)
    if list(frame.columns[:2]) != ["src", "dst"]:
        raise ConfigError(f"{path}: header must be 'src,dst'")
    return [(int(s), int(d)) for s, d in zip(frame["src"], frame["dst"])]


def write_edge_list(path: PathLike, edges: List[Tuple[int, int]]) -> None:
    """Write edges as a `src,dst` CSV."""
    pd.DataFrame(edges, columns=["src", "dst"]).to_csv(path, index=False)
