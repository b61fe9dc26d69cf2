import numpy as np
import pytest
import scipy.sparse as sp

from src.core.exceptions import ConstructionError, DirectionError
from src.gsom.curvature import (
    assemble_system,
    build_huber_operator,
    default_kappa_min,
    huber_grad_scalar,
    huber_penalty_grad,
    huber_penalty_value,
    huber_value,
)
from src.problems.base import CurvatureInfo
from src.problems.builders import build_cauchy_denoise, build_quadratic_tv
from src.problems.smooth import GramOperator


def _away_from_seams(rng: np.random.Generator, C: np.ndarray, gamma: float) -> np.ndarray:
    for _ in range(100):
        x = 0.5 * rng.standard_normal(C.shape[1])
        if np.min(np.abs(np.abs(C @ x) - 1.0 / gamma)) > 1e-3 / gamma:
            return x
    raise AssertionError("no sample away from the Huber seams")


class TestHuber:
    @pytest.mark.parametrize(
        "t, value, grad",
        [(0.25, 0.0625, 0.5), (0.5, 0.25, 1.0), (-3.0, 2.75, -1.0), (0.0, 0.0, 0.0)],
    )
    def test_examples(self, t, value, grad):
        assert huber_value(t, 2.0) == pytest.approx(value)
        assert huber_grad_scalar(t, 2.0) == pytest.approx(grad)

    def test_continuous_at_seam(self):
        gamma = 7.0
        seam = 1.0 / gamma
        assert huber_value(seam - 1e-12, gamma) == pytest.approx(huber_value(seam + 1e-12, gamma), abs=1e-10)
        assert huber_grad_scalar(seam - 1e-12, gamma) == pytest.approx(1.0, abs=1e-9)

    def test_penalty_gradient_finite_differences(self, rng):
        C = rng.standard_normal((5, 8))
        gamma = 2.0
        Cs = sp.csr_matrix(C)
        for _ in range(10):
            x = _away_from_seams(rng, C, gamma)
            fd = np.zeros(8)
            for j in range(8):
                e = np.zeros(8)
                e[j] = 1e-6
                fd[j] = (huber_penalty_value(Cs, x + e, gamma) - huber_penalty_value(Cs, x - e, gamma)) / 2e-6
            g = huber_penalty_grad(Cs, x, gamma)
            assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))

    def test_operator_is_hessian_of_penalty(self, rng):
        C = rng.standard_normal((6, 4))
        Cs = sp.csr_matrix(C)
        for _ in range(5):
            x = 0.5 * rng.standard_normal(4)
            cx = np.sort(np.abs(C @ x))
            gamma = 2.0 / (cx[1] + cx[2])
            if np.min(np.abs(np.abs(C @ x) - 1.0 / gamma)) <= 1e-3 / gamma:
                continue
            H = build_huber_operator(Cs, x, gamma).assembled.toarray()
            fd = np.zeros((4, 4))
            for j in range(4):
                e = np.zeros(4)
                e[j] = 1e-6
                fd[:, j] = (huber_penalty_grad(Cs, x + e, gamma) - huber_penalty_grad(Cs, x - e, gamma)) / 2e-6
            assert np.linalg.norm(fd - H) <= 1e-4 * max(1.0, np.linalg.norm(H))


class TestHuberOperator:
    def test_mask(self):
        op = build_huber_operator(sp.identity(2, format="csr"), np.array([0.05, 1.0]), 10.0)
        np.testing.assert_array_equal(op.mask, [True, False])
        np.testing.assert_allclose(op.assembled.toarray(), np.diag([10.0, 0.0]))

    def test_single_difference_row(self):
        op = build_huber_operator(sp.csr_matrix(np.array([[1.0, -1.0]])), np.array([2.0, 2.0]), 1.0)
        np.testing.assert_allclose(op.assembled.toarray(), [[1.0, -1.0], [-1.0, 1.0]])

    def test_all_active_is_scaled_gram(self, rng):
        C = sp.csr_matrix(rng.standard_normal((4, 3)))
        op = build_huber_operator(C, np.zeros(3), 5.0)
        np.testing.assert_allclose(op.assembled.toarray(), 5.0 * (C.T @ C).toarray(), atol=1e-12)

    def test_zero_gamma(self):
        op = build_huber_operator(sp.identity(3, format="csr"), np.zeros(3), 0.0)
        assert op.n_masked == 0
        np.testing.assert_array_equal(op.apply(np.ones(3)), np.zeros(3))

    def test_negative_gamma(self):
        with pytest.raises(ConstructionError):
            build_huber_operator(sp.identity(2, format="csr"), np.zeros(2), -1.0)

    def test_apply_matches_assembled(self, rng):
        p = build_quadratic_tv(6, 100.0, 0.5)
        x = 0.001 * rng.standard_normal(36)
        op = build_huber_operator(p.C, x, 1000.0)
        v = rng.standard_normal(36)
        np.testing.assert_allclose(op.apply(v), op.assembled @ v, atol=1e-10)
        np.testing.assert_allclose(op.diagonal(), op.assembled.diagonal(), atol=1e-12)
        assert float(v @ op.apply(v)) >= -1e-10


class TestAssembleSystem:
    def test_clamps_negative_diagonal(self):
        B = CurvatureInfo(diagonal=np.array([-0.24]), spd_guaranteed=False)
        huber = build_huber_operator(sp.identity(1, format="csr"), np.array([5.0]), 10.0)
        M = assemble_system(B, huber, 1.0, 1e-4)
        np.testing.assert_allclose(M.assembled.toarray(), [[1e-4]])

    def test_identity_is_untouched(self):
        B = CurvatureInfo(matrix=sp.identity(3, format="csr"), spd_guaranteed=True)
        huber = build_huber_operator(sp.identity(3, format="csr"), np.ones(3), 0.0)
        M = assemble_system(B, huber, 1.0, 1e-6)
        assert M.shift == 0.0
        np.testing.assert_allclose(M.assembled.toarray(), np.eye(3))

    def test_shifts_indefinite_matrix(self):
        B = CurvatureInfo(matrix=sp.diags([-1.0, 2.0], format="csr"), spd_guaranteed=False)
        huber = build_huber_operator(sp.identity(2, format="csr"), np.ones(2), 0.0)
        M = assemble_system(B, huber, 1.0, 1e-3)
        assert np.min(np.linalg.eigvalsh(M.assembled.toarray())) >= 0.9e-3

    def test_cauchy_system_is_bounded_below(self, rng):
        f_obs = rng.standard_normal(64)
        p = build_cauchy_denoise(f_obs, 0.5, 0.3, 8)
        x = f_obs + 2.0 * rng.standard_normal(64)
        kappa = 1e-4
        M = assemble_system(p.smooth.curvature(x), build_huber_operator(p.C, x, 100.0), p.beta, kappa)
        for _ in range(10):
            v, w = rng.standard_normal(64), rng.standard_normal(64)
            assert float(v @ M.apply(v)) >= kappa * float(v @ v) * (1.0 - 1e-12)
            assert float(w @ M.apply(v)) == pytest.approx(float(v @ M.apply(w)), rel=1e-10, abs=1e-9)

    def test_principal_subsystem(self, rng):
        p = build_quadratic_tv(4, 100.0, 0.5)
        x = rng.standard_normal(16)
        M = assemble_system(p.smooth.curvature(x), build_huber_operator(p.C, x, 1.0), p.beta, 1e-6)
        full = M.assembled.toarray()
        sub = M.principal(np.array([0, 2, 5, 7]))
        np.testing.assert_allclose(sub.assembled.toarray(), full[np.ix_([0, 2, 5, 7], [0, 2, 5, 7])])
        nested = sub.principal(np.array([1, 3]))
        np.testing.assert_allclose(nested.assembled.toarray(), full[np.ix_([2, 7], [2, 7])])
        v = rng.standard_normal(2)
        np.testing.assert_allclose(nested.apply(v), full[np.ix_([2, 7], [2, 7])] @ v, atol=1e-12)

    def test_matrix_free_curvature(self, rng):
        A = rng.standard_normal((10, 6))
        B = CurvatureInfo(operator=GramOperator(A), spd_guaranteed=True)
        M = assemble_system(B, build_huber_operator(sp.identity(6, format="csr"), np.ones(6), 0.0), 1.0, 1e-6)
        assert not M.can_assemble
        v = rng.standard_normal(6)
        np.testing.assert_allclose(M.apply(v), A.T @ (A @ v) + M.shift * v, atol=1e-10)
        with pytest.raises(DirectionError):
            _ = M.assembled

    def test_rejects_non_positive_floor(self):
        B = CurvatureInfo(diagonal=np.ones(2), spd_guaranteed=True)
        huber = build_huber_operator(sp.identity(2, format="csr"), np.ones(2), 0.0)
        with pytest.raises(ConstructionError):
            assemble_system(B, huber, 1.0, 0.0)

    def test_default_floor(self):
        B = CurvatureInfo(diagonal=np.array([2.0, 4.0]), spd_guaranteed=True)
        assert default_kappa_min(B) == pytest.approx(4e-6)
