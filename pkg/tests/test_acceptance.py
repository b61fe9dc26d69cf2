"""End-to-end behavior on the benchmark problem families."""

import numpy as np
import pandas as pd
import pytest
import scipy.sparse as sp

from src.baselines.admm import admm_solve, soft_threshold
from src.bench import ActiveSetSuite, BlockJacobiSuite, LinsolveSuite, iteration_capped
from src.core.solver_settings import AdmmSettings, SolverConfig
from src.gsom.solver import gsom_solve
from src.linalg.sparse import stack_rows
from src.problems.base import ProblemSpec
from src.problems.builders import (
    build_cauchy_denoise,
    build_graph_trend,
    build_prox_instance,
    build_quadratic_tv,
)
from src.problems.data import (
    blocky_image,
    cauchy_noise,
    gaussian_noise,
    piecewise_constant_signal,
    random_fused_instance,
)
from src.problems.operators import grid_graph_edges
from src.problems.smooth import QuadraticSmooth
from src.schemas.config import parse_run_config


def _prox_data(seed: int):
    rng = np.random.default_rng(seed)
    alpha = float(rng.uniform(0.1, 1.5))
    xhat = 2.0 * rng.standard_normal(10)
    # keep every coordinate clear of the threshold kink
    while np.min(np.abs(np.abs(xhat) - alpha)) < 5e-2:
        xhat = 2.0 * rng.standard_normal(10)
    return xhat, alpha


@pytest.mark.parametrize("seed", range(20))
def test_prox_matches_soft_threshold(seed):
    xhat, alpha = _prox_data(seed)
    p = build_prox_instance(xhat, sp.identity(10, format="csr"), alpha)
    report = gsom_solve(p, np.zeros(10))
    assert np.max(np.abs(report.x_final - soft_threshold(xhat, alpha))) <= 1e-8


def _fused(seed: int, m: int = 30) -> ProblemSpec:
    rows, y = random_fused_instance(m, m // 2, 0.1, seed)
    C = stack_rows([sp.csr_matrix(rows), sp.identity(m, format="csr")])
    return ProblemSpec.create(QuadraticSmooth.distance_to(y), C, 0.3)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(10))
def test_fused_lasso_agrees_with_admm(seed):
    p = _fused(seed)
    gsom = gsom_solve(p, np.zeros(p.dim), SolverConfig(tol_residual=1e-9))
    admm = admm_solve(p, AdmmSettings(tol=1e-10))
    assert abs(gsom.cost_final - admm.cost_final) <= 1e-5 * (1.0 + abs(admm.cost_final))
    gap = np.linalg.norm(gsom.x_final - admm.x_final) / (1.0 + np.linalg.norm(admm.x_final))
    assert gap <= 1e-4


@pytest.mark.slow
@pytest.mark.parametrize("beta", [0.5, 0.9])
def test_huber_curvature_beats_plain_gradient_step(beta):
    p = build_quadratic_tv(32, 100.0, beta)
    x0 = np.zeros(p.dim)
    base = iteration_capped(SolverConfig(), 50)
    plain = gsom_solve(p, x0, base.model_copy(update={"gamma": 0.0})).cost_final
    for gamma in (500.0, 1000.0, 5000.0):
        smoothed = gsom_solve(p, x0, base.model_copy(update={"gamma": gamma})).cost_final
        assert smoothed < plain


@pytest.mark.slow
@pytest.mark.parametrize("a", [0.3, 0.9])
@pytest.mark.parametrize("beta", [0.1, 0.5])
def test_cauchy_descent_is_monotone(a, beta):
    f_obs = cauchy_noise(blocky_image(32), 0.02, seed=7)
    p = build_cauchy_denoise(f_obs.reshape(-1), a, beta, 32)
    report = gsom_solve(p, f_obs.reshape(-1), SolverConfig(max_iter=100))
    costs = report.costs()
    assert np.all(np.diff(costs) < 0)
    if costs.size:
        assert costs[-1] == report.cost_final


@pytest.mark.slow
def test_graph_trend_not_worse_than_admm_at_equal_budget():
    signal = piecewise_constant_signal(20, 20)
    y = gaussian_noise(signal.reshape(-1), 0.1, seed=3)
    p = build_graph_trend(grid_graph_edges(20, 20), y, 1.0, 0.1, order=2)
    gsom = gsom_solve(p, np.zeros(p.dim), iteration_capped(SolverConfig(), 50))
    admm = admm_solve(p, AdmmSettings(maxit=50))
    assert gsom.cost_final <= admm.cost_final + 1e-6 * (1.0 + abs(admm.cost_final))


@pytest.mark.slow
def test_active_set_reduction_speeds_up_the_direction(tmp_path):
    config = parse_run_config(
        """
[problem]
kind = "quadratic_tv"
grid_n = 32
beta = 0.5

[bench]
repeats = 3
iterations = 50
frozen_fraction = 0.3
"""
    )
    result = ActiveSetSuite(config).run(tmp_path)
    table = pd.read_csv(result.table_path).set_index("variant")
    assert table.loc["reduced", "samples"] > 0
    assert table.loc["reduced", "ratio"] <= 0.77


@pytest.mark.slow
def test_pcg_beats_dense_direct_at_largest_grid():
    config = parse_run_config(
        """
[problem]
kind = "quadratic_tv"
beta = 0.5

[bench]
grid_sizes = [40, 50, 60]
linsolve_kinds = ["direct", "pcg", "gmres"]
"""
    )
    samples = pd.concat([LinsolveSuite(config).measure(k) for k in range(3)], ignore_index=True)
    assert sorted(samples["m"].unique()) == [1600, 2500, 3600]
    medians = samples[samples["m"] == 3600].groupby("solver")["seconds"].median()
    assert medians["pcg"] < medians["direct"]


@pytest.mark.slow
def test_block_jacobi_on_ten_thousand_unknowns(tmp_path):
    config = parse_run_config(
        """
[problem]
kind = "quadratic_tv"
grid_n = 100
beta = 0.5

[linsolve]
tol = 1e-12
partitions = 4
overlap = 0.2
block_maxit = 500

[bench]
repeats = 1
iterations = 5
partitions = [4]
"""
    )
    result = BlockJacobiSuite(config).run(tmp_path)
    table = pd.read_csv(result.table_path).set_index("variant")
    m = 10000
    assert table.loc["p=4", "m"] == m
    assert table.loc["p=4", "max_block_size"] <= m / 4 * 1.4 + 1
    assert table.loc["p=4", "direction_gap"] <= 1e-6
    assert table.loc["p=4", "cost_gap"] <= 1e-3
