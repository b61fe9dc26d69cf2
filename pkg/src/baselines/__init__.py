"""Reference solvers and brute-force oracles."""

from src.baselines.admm import admm_multiplier, admm_solve, composite_residual, soft_threshold
from src.baselines.oracles import grid_oracle_phi, grid_oracle_qp

__all__ = [
    "admm_multiplier",
    "admm_solve",
    "composite_residual",
    "grid_oracle_phi",
    "grid_oracle_qp",
    "soft_threshold",
]
