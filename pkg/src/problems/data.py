"""Seeded synthetic data for the benchmark problems."""

from typing import Callable, Sequence, Tuple, Union

import numpy as np

from src.core.exceptions import ConstructionError

Forcing = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def interior_nodes(grid_n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Coordinates (x, y) of the interior nodes of the unit square, row-major."""
    h = 1.0 / (grid_n + 1)
    t = h * np.arange(1, grid_n + 1)
    yy, xx = np.meshgrid(t, t, indexing="ij")
    return xx.ravel(), yy.ravel()


def sample_forcing(forcing: Forcing, grid_n: int) -> np.ndarray:
    """Forcing field at the interior nodes; a float means a constant field."""
    xx, yy = interior_nodes(grid_n)
    if callable(forcing):
        values = np.asarray(forcing(xx, yy), dtype=np.float64)
    else:
        values = np.full(xx.shape, float(forcing))
    if values.shape != xx.shape:
        raise ConstructionError(f"forcing returned shape {values.shape}, expected {xx.shape}")
    return values


def blocky_image(grid_n: int) -> np.ndarray:
    """Piecewise-constant test image in [0, 1]: a bright square and a mid-grey disc."""
    xx, yy = interior_nodes(grid_n)
    image = np.zeros_like(xx)
    image[(np.abs(xx - 0.3) < 0.15) & (np.abs(yy - 0.35) < 0.2)] = 1.0
    image[(xx - 0.68) ** 2 + (yy - 0.62) ** 2 < 0.04] = 0.5
    return image


def cauchy_noise(u: np.ndarray, xi: float, seed: int) -> np.ndarray:
    """f = u + xi * eta1 / eta2 with independent standard normals eta1, eta2."""
    rng = np.random.default_rng(seed)
    eta1 = rng.standard_normal(u.shape)
    eta2 = rng.standard_normal(u.shape)
    return u + xi * eta1 / eta2


def random_convolution_matrix(n_obs: int, m: int, seed: int) -> np.ndarray:
    """Uniform random blur matrix with rows normalised to sum one."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.0, 1.0, size=(n_obs, m))
    return A / A.sum(axis=1, keepdims=True)


def piecewise_constant_signal(rows: int, cols: int, levels: Sequence[float] = (0.0, 1.0, 2.0, 0.5)) -> np.ndarray:
    """Signal on a rows x cols lattice, constant on each quadrant."""
    r, c = np.divmod(np.arange(rows * cols), cols)
    quadrant = 2 * (r >= rows // 2) + (c >= cols // 2)
    return np.asarray(levels, dtype=np.float64)[quadrant]


def gaussian_noise(signal: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    """signal + N(0, sigma^2) noise."""
    return signal + sigma * np.random.default_rng(seed).standard_normal(signal.shape)


def random_fused_instance(m: int, n_random_rows: int, density: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random dense difference-like rows for fused-lasso test instances.

    Returns:
        (rows, y): an n_random_rows x m matrix with +-1 entries and a target vector
    """
    rng = np.random.default_rng(seed)
    rows = np.zeros((n_random_rows, m))
    for i in range(n_random_rows):
        support = rng.choice(m, size=max(2, int(density * m)), replace=False)
        rows[i, support] = rng.choice([-1.0, 1.0], size=support.size)
    y = rng.standard_normal(m) * 2.0
    return rows, y
