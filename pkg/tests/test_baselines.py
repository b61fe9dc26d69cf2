import numpy as np
import pytest
import scipy.sparse as sp

from src.baselines.admm import admm_multiplier, admm_solve, composite_residual, soft_threshold
from src.baselines.oracles import grid_oracle_phi, grid_oracle_qp
from src.core.constants import Termination
from src.core.exceptions import ConstructionError, NonQuadraticSmoothPartError
from src.core.solver_settings import AdmmSettings
from src.problems.base import ProblemSpec
from src.problems.builders import build_cauchy_denoise, build_deconvolution
from src.problems.smooth import CauchySmooth, QuadraticSmooth


class TestSoftThreshold:
    def test_examples(self):
        np.testing.assert_array_equal(soft_threshold(np.array([3.0, -0.5, -2.0]), 1.0), [2.0, -0.0, -1.0])
        np.testing.assert_array_equal(soft_threshold(np.array([0.7]), 0.0), [0.7])

    def test_negative_threshold(self):
        with pytest.raises(ConstructionError):
            soft_threshold(np.ones(2), -1.0)


class TestAdmm:
    def test_scalar_prox(self, scalar_prox):
        report = admm_solve(scalar_prox)
        assert report.solver == "admm"
        assert report.x_final[0] == pytest.approx(2.0, abs=1e-8)
        assert report.termination == Termination.RESIDUAL_SMALL

    def test_fused_lasso(self, fused_three):
        report = admm_solve(fused_three)
        np.testing.assert_allclose(report.x_final, [0.5, 0.5, 4.0], atol=1e-5)

    def test_zero_penalty_is_one_solve(self):
        y = np.array([1.0, -2.0])
        p = ProblemSpec.create(QuadraticSmooth.distance_to(y), sp.identity(2), 0.0)
        report = admm_solve(p)
        assert report.iterations == 1
        np.testing.assert_allclose(report.x_final, y)

    def test_multiplier_certifies_optimality(self, rng):
        A = rng.standard_normal((8, 5))
        p = build_deconvolution(A, rng.standard_normal(8), 0.1, 0.3, [(0, 1), (1, 2), (3, 4)])
        report = admm_solve(p, AdmmSettings(tol=1e-10))
        assert report.termination == Termination.RESIDUAL_SMALL
        assert report.residual_final <= 1e-4

    def test_multiplier_signs(self):
        p = ProblemSpec.create(QuadraticSmooth.distance_to(np.zeros(2)), sp.identity(2), 2.0)
        xi = admm_multiplier(p, np.array([1.0, 0.0]), np.array([0.3, 0.8]), rho=1.0)
        np.testing.assert_allclose(xi, [1.0, 0.4])
        assert composite_residual(p, np.zeros(2), np.zeros(2)) == 0.0

    def test_iteration_cap(self, fused_three):
        report = admm_solve(fused_three, AdmmSettings(maxit=3))
        assert report.iterations == 3
        assert report.termination == Termination.MAX_ITER
        assert [r.iter for r in report.trace] == [1, 2, 3]

    def test_requires_quadratic(self):
        p = build_cauchy_denoise(np.zeros(4), 1.0, 0.5, 2)
        with pytest.raises(NonQuadraticSmoothPartError):
            admm_solve(p)


class TestGridOracles:
    def test_qp_zero_gradient(self):
        xi, obj = grid_oracle_qp(np.zeros(2), sp.csr_matrix(np.array([[1.0, 0.0]])), 1.0)
        np.testing.assert_allclose(xi, [0.0], atol=1e-12)
        assert obj <= 1e-20

    def test_qp_box_example(self):
        xi, _ = grid_oracle_qp(np.array([0.5, -2.0]), sp.identity(2, format="csr"), 1.0)
        np.testing.assert_allclose(xi, [-0.5, 1.0], atol=0.01)

    def test_qp_single_row(self):
        xi, _ = grid_oracle_qp(np.array([1.0, 0.0]), np.array([[2.0, 0.0]]), 1.0)
        np.testing.assert_allclose(xi, [-0.5], atol=0.005)

    def test_qp_too_many_rows(self):
        with pytest.raises(ConstructionError):
            grid_oracle_qp(np.zeros(4), np.eye(4), 1.0)

    def test_phi_scalar_prox(self, scalar_prox):
        x, cost = grid_oracle_phi(scalar_prox)
        assert x[0] == pytest.approx(2.0, abs=1e-3)
        assert cost == pytest.approx(2.5, abs=1e-6)

    def test_phi_smooth_only(self):
        p = ProblemSpec.create(QuadraticSmooth.distance_to(np.array([1.0])), sp.csr_matrix((0, 1)), 0.0)
        x, _ = grid_oracle_phi(p)
        assert x[0] == pytest.approx(1.0, abs=1e-3)

    def test_phi_cauchy(self):
        p = ProblemSpec.create(CauchySmooth(np.zeros(1), 1.0), sp.csr_matrix((0, 1)), 0.0)
        x, _ = grid_oracle_phi(p)
        assert x[0] == pytest.approx(0.0, abs=1e-3)

    def test_phi_too_many_variables(self):
        p = ProblemSpec.create(QuadraticSmooth.distance_to(np.zeros(3)), sp.identity(3), 1.0)
        with pytest.raises(ConstructionError):
            grid_oracle_phi(p)
