"""Problem abstraction and the built-in problem families."""

from src.problems.base import CurvatureInfo, ProblemSpec, SmoothPart, eval_cost
from src.problems.builders import (
    build_cauchy_denoise,
    build_deconvolution,
    build_graph_trend,
    build_prox_instance,
    build_quadratic_tv,
)
from src.problems.smooth import CauchySmooth, LeastSquaresSmooth, QuadraticSmooth

__all__ = [
    "CauchySmooth",
    "CurvatureInfo",
    "LeastSquaresSmooth",
    "ProblemSpec",
    "QuadraticSmooth",
    "SmoothPart",
    "build_cauchy_denoise",
    "build_deconvolution",
    "build_graph_trend",
    "build_prox_instance",
    "build_quadratic_tv",
    "eval_cost",
]
