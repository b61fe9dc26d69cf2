import numpy as np
import pytest
import scipy.sparse as sp

from src.core.constants import BlockJacobiMode, LinsolveKind, SolverUsed
from src.core.exceptions import DirectionError
from src.core.solver_settings import LinsolveSettings
from src.gsom.curvature import SystemOperator, assemble_system, build_huber_operator
from src.gsom.direction import (
    ActiveSplit,
    block_jacobi_solve,
    factor_storage_kb,
    identify_active,
    partition_blocks,
    solve_direction,
)
from src.gsom.subgradient import classify_indices
from src.problems.base import CurvatureInfo
from src.problems.builders import build_quadratic_tv


def _system(B: sp.spmatrix) -> SystemOperator:
    m = B.shape[0]
    curvature = CurvatureInfo(matrix=sp.csr_matrix(B), spd_guaranteed=True)
    return assemble_system(curvature, build_huber_operator(sp.identity(m, format="csr"), np.ones(m), 0.0), 1.0, 1e-6)


@pytest.fixture
def tv_system(rng):
    p = build_quadratic_tv(8, 100.0, 0.5)
    x = 0.01 * rng.standard_normal(64)
    M = assemble_system(p.smooth.curvature(x), build_huber_operator(p.C, x, 10.0), p.beta, 1e-6)
    return M, rng.standard_normal(64)


class TestIdentifyActive:
    def test_example(self):
        I2 = sp.identity(2, format="csr")
        part = classify_indices(I2, np.array([0.0, 1.0]), 1e-8)
        split = identify_active(I2, part, np.array([1e-9, 0.3]), 1e-6)
        np.testing.assert_array_equal(split.frozen, [0])
        np.testing.assert_array_equal(split.free, [1])

    def test_no_active_rows(self):
        I2 = sp.identity(2, format="csr")
        part = classify_indices(I2, np.array([1.0, 1.0]), 1e-8)
        assert identify_active(I2, part, np.zeros(2), 1e-6).frozen.size == 0

    def test_large_residual_is_free(self):
        I2 = sp.identity(2, format="csr")
        part = classify_indices(I2, np.zeros(2), 1e-8)
        assert identify_active(I2, part, np.array([1.0, -1.0]), 1e-6).frozen.size == 0


class TestSolveDirection:
    def test_identity(self):
        result = solve_direction(_system(sp.identity(2)), np.array([1.0, -2.0]))
        np.testing.assert_allclose(result.d, [-1.0, 2.0])
        assert result.solver_used == SolverUsed.DIRECT
        assert result.linear_residual <= 1e-12

    def test_all_frozen(self):
        split = ActiveSplit(frozen=np.arange(3), free=np.zeros(0, dtype=np.int64), eps_act=1e-6)
        result = solve_direction(_system(sp.identity(3)), np.ones(3), split)
        np.testing.assert_array_equal(result.d, np.zeros(3))
        assert result.solver_used == SolverUsed.NONE
        assert result.frozen_count == 3

    def test_reduced_matches_principal_solve(self, rng):
        Q = rng.standard_normal((40, 40))
        M = _system(sp.csr_matrix(Q @ Q.T + 40.0 * np.eye(40)))
        residual = rng.standard_normal(40)
        frozen = np.sort(rng.choice(40, size=10, replace=False))
        free = np.setdiff1d(np.arange(40), frozen)
        result = solve_direction(M, residual, ActiveSplit(frozen=frozen, free=free, eps_act=0.0))
        dense = M.assembled.toarray()
        expected = np.linalg.solve(dense[np.ix_(free, free)], -residual[free])
        np.testing.assert_array_equal(result.d[frozen], np.zeros(10))
        np.testing.assert_allclose(result.d[free], expected, rtol=1e-8, atol=1e-10)
        assert result.reduced

    @pytest.mark.parametrize("kind", [LinsolveKind.PCG, LinsolveKind.GMRES, LinsolveKind.BLOCK_JACOBI])
    def test_solvers_agree(self, tv_system, kind):
        M, residual = tv_system
        cfg = LinsolveSettings(tol=1e-12)
        direct = solve_direction(M, residual, None, cfg.model_copy(update={"kind": LinsolveKind.DIRECT}))
        other = solve_direction(M, residual, None, cfg.model_copy(update={"kind": kind}))
        assert other.converged
        np.testing.assert_allclose(other.d, direct.d, rtol=1e-6, atol=1e-8)
        assert float(other.d @ residual) < 0

    def test_ilu_preconditioner(self, tv_system):
        M, residual = tv_system
        cfg = LinsolveSettings(kind=LinsolveKind.PCG, preconditioner="ilu", tol=1e-12)
        result = solve_direction(M, residual, None, cfg)
        assert result.solver_used == SolverUsed.PCG
        assert result.linear_residual <= 1e-10

    def test_fallback_to_direct(self, tv_system):
        M, residual = tv_system
        result = solve_direction(M, residual, None, LinsolveSettings(kind=LinsolveKind.PCG, tol=1e-14, maxit=1))
        assert result.fallback
        assert result.solver_used == SolverUsed.DIRECT
        assert result.linear_residual <= 1e-10

    def test_sparse_direct_above_dense_limit(self, tv_system):
        M, residual = tv_system
        dense = solve_direction(M, residual, None, LinsolveSettings(kind=LinsolveKind.DIRECT))
        sparse = solve_direction(M, residual, None, LinsolveSettings(kind=LinsolveKind.DIRECT, dense_limit=10))
        np.testing.assert_allclose(sparse.d, dense.d, rtol=1e-10, atol=1e-12)


class TestBlockJacobi:
    def test_identity_in_one_sweep(self):
        cfg = LinsolveSettings(block_mode=BlockJacobiMode.RICHARDSON)
        result = block_jacobi_solve(_system(sp.identity(10)), np.arange(10.0), 2, 0.2, cfg)
        np.testing.assert_allclose(result.d, -np.arange(10.0))
        assert result.iters == 1
        assert result.converged

    def test_aligned_block_diagonal(self, rng):
        blocks = []
        for _ in range(2):
            Q = rng.standard_normal((3, 3))
            blocks.append(Q @ Q.T + 3.0 * np.eye(3))
        M = _system(sp.block_diag(blocks, format="csr"))
        residual = rng.standard_normal(6)
        cfg = LinsolveSettings(block_mode=BlockJacobiMode.RICHARDSON, tol=1e-12)
        result = block_jacobi_solve(M, residual, 2, 0.0, cfg)
        assert result.iters == 1
        np.testing.assert_allclose(result.d, np.linalg.solve(M.assembled.toarray(), -residual), rtol=1e-10)

    def test_converges_on_grid_system(self, tv_system):
        M, residual = tv_system
        cfg = LinsolveSettings(tol=1e-12, block_mode=BlockJacobiMode.KRYLOV)
        result = block_jacobi_solve(M, residual, 4, 0.2, cfg)
        expected = np.linalg.solve(M.assembled.toarray(), -residual)
        assert result.converged
        np.testing.assert_allclose(result.d, expected, rtol=1e-6, atol=1e-8)
        assert result.max_block_size <= 16 * 1.4 + 1
        assert result.factor_storage_kb > 0

    def test_breadth_first_reordering(self, tv_system):
        M, residual = tv_system
        cfg = LinsolveSettings(tol=1e-12, reorder_bfs=True)
        result = block_jacobi_solve(M, residual, 3, 0.2, cfg)
        np.testing.assert_allclose(result.d, np.linalg.solve(M.assembled.toarray(), -residual), rtol=1e-6, atol=1e-8)

    def test_deterministic(self, tv_system):
        M, residual = tv_system
        first = block_jacobi_solve(M, residual, 4, 0.2, workers=4)
        second = block_jacobi_solve(M, residual, 4, 0.2, workers=1)
        np.testing.assert_array_equal(first.d, second.d)

    def test_invalid_arguments(self):
        M = _system(sp.identity(4))
        with pytest.raises(DirectionError):
            block_jacobi_solve(M, np.ones(4), 1, 0.2)
        with pytest.raises(DirectionError):
            block_jacobi_solve(M, np.ones(4), 2, 0.5)

    def test_partition_blocks(self):
        ranges = partition_blocks(64, 3, 0.2)
        covered = np.zeros(64, dtype=bool)
        for lo, hi in ranges:
            covered[lo:hi] = True
            assert hi - lo <= 22 * 1.4 + 1
        assert covered.all()
        assert partition_blocks(10, 2, 0.0) == [(0, 5), (5, 10)]

    def test_factor_storage(self):
        assert 0 < factor_storage_kb(sp.identity(8, format="csc")) <= 2 * 8 * 12 / 1024.0
