import numpy as np
import pytest
import scipy.sparse as sp

from src.core.exceptions import ConstructionError, DimensionMismatchError, NotPositiveDefiniteError
from src.linalg.dense import chol_factor, chol_solve, chol_solve_factored
from src.linalg.iterative import (
    gmres_solve,
    ilu_preconditioner,
    jacobi_preconditioner,
    min_eig_estimate,
    op_norm_estimate,
    pcg_solve,
)
from src.linalg.sparse import (
    csr_from_triplets,
    gram_small,
    matvec,
    matvec_t,
    principal_submatrix,
    select_rows,
    sparse_direct_solve,
)
from src.problems.operators import dirichlet_laplacian


def _spd(rng: np.random.Generator, n: int) -> np.ndarray:
    Q = rng.standard_normal((n, n))
    return Q @ Q.T + n * np.eye(n)


class TestTriplets:
    def test_duplicates_are_summed(self):
        M = csr_from_triplets([(0, 0, 1.0), (0, 0, 1.0)], 1, 1)
        np.testing.assert_array_equal(M.toarray(), [[2.0]])

    def test_explicit_zero_is_dropped(self):
        M = csr_from_triplets([(0, 1, 0.0)], 1, 2)
        assert M.shape == (1, 2)
        assert M.nnz == 0

    def test_rows_are_sorted(self):
        M = csr_from_triplets([(1, 0, 3.0), (0, 1, -1.0)], 2, 2)
        np.testing.assert_array_equal(M.toarray(), [[0.0, -1.0], [3.0, 0.0]])
        assert M.has_sorted_indices

    def test_out_of_range(self):
        with pytest.raises(ConstructionError):
            csr_from_triplets([(2, 0, 1.0)], 2, 2)
        with pytest.raises(ConstructionError):
            csr_from_triplets([(0, -1, 1.0)], 2, 2)

    def test_empty(self):
        M = csr_from_triplets([], 3, 4)
        assert M.shape == (3, 4)
        assert M.nnz == 0


class TestProducts:
    def test_matvec_examples(self):
        I2 = sp.identity(2, format="csr")
        np.testing.assert_array_equal(matvec(I2, np.array([3.0, 4.0])), [3.0, 4.0])
        D = sp.csr_matrix(np.array([[1.0, -1.0]]))
        np.testing.assert_array_equal(matvec(D, np.array([2.0, 2.0])), [0.0])
        np.testing.assert_array_equal(matvec_t(D, np.array([1.0])), [1.0, -1.0])

    def test_shape_mismatch(self):
        D = sp.csr_matrix(np.array([[1.0, -1.0]]))
        with pytest.raises(DimensionMismatchError):
            matvec(D, np.ones(3))
        with pytest.raises(DimensionMismatchError):
            matvec_t(D, np.ones(2))

    def test_adjoint_identity(self, rng):
        M = sp.csr_matrix(rng.standard_normal((40, 30)) * (rng.random((40, 30)) < 0.1))
        x, y = rng.standard_normal(30), rng.standard_normal(40)
        lhs = float(matvec(M, x) @ y)
        rhs = float(x @ matvec_t(M, y))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_select_rows(self):
        M = sp.csr_matrix(np.arange(12.0).reshape(4, 3))
        np.testing.assert_array_equal(select_rows(M, [2, 0]).toarray(), M.toarray()[[2, 0]])
        assert select_rows(M, []).shape == (0, 3)
        with pytest.raises(ConstructionError):
            select_rows(M, [4])

    def test_gram_small(self):
        M = sp.csr_matrix(np.array([[1.0, -1.0, 0.0], [0.0, 2.0, 1.0]]))
        G = gram_small(M)
        np.testing.assert_allclose(G, [[2.0, -2.0], [-2.0, 5.0]])
        np.testing.assert_array_equal(G, G.T)

    def test_principal_submatrix(self):
        M = sp.csr_matrix(np.arange(16.0).reshape(4, 4))
        idx = np.array([1, 3])
        np.testing.assert_array_equal(principal_submatrix(M, idx).toarray(), [[5.0, 7.0], [13.0, 15.0]])


class TestCholesky:
    def test_diagonal(self):
        np.testing.assert_allclose(chol_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0])

    def test_matches_dense_solve(self, rng):
        A = _spd(rng, 12)
        b = rng.standard_normal(12)
        factor = chol_factor(A)
        np.testing.assert_allclose(chol_solve_factored(factor, b), np.linalg.solve(A, b), rtol=1e-10)

    def test_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            chol_solve(np.array([[1.0, 1.0], [1.0, 1.0]]), np.array([1.0, 1.0]))

    def test_indefinite(self):
        with pytest.raises(NotPositiveDefiniteError):
            chol_factor(np.diag([1.0, -1.0]))

    def test_shapes(self):
        with pytest.raises(DimensionMismatchError):
            chol_factor(np.ones((2, 3)))
        with pytest.raises(DimensionMismatchError):
            chol_solve(np.eye(2), np.ones(3))


class TestKrylov:
    def test_pcg_diagonal(self):
        A = np.diag([2.0, 4.0])
        result = pcg_solve(lambda v: A @ v, np.array([2.0, 4.0]), jacobi_preconditioner(np.diag(A)), tol=1e-12)
        np.testing.assert_allclose(result.x, [1.0, 1.0])
        assert result.converged
        assert result.iters <= 2

    def test_pcg_zero_rhs(self):
        result = pcg_solve(lambda v: v, np.zeros(3))
        assert result.iters == 0
        np.testing.assert_array_equal(result.x, np.zeros(3))

    def test_pcg_matches_cholesky(self, rng):
        A = _spd(rng, 50)
        b = rng.standard_normal(50)
        result = pcg_solve(lambda v: A @ v, b, tol=1e-12)
        assert result.converged
        np.testing.assert_allclose(result.x, chol_solve(A, b), rtol=1e-8, atol=1e-10)

    def test_pcg_reports_not_converged(self, rng):
        A = _spd(rng, 30)
        result = pcg_solve(lambda v: A @ v, rng.standard_normal(30), tol=1e-14, maxit=1)
        assert not result.converged
        assert result.iters == 1

    def test_pcg_with_ilu(self):
        L = dirichlet_laplacian(10)
        b = np.ones(100)
        result = pcg_solve(lambda v: L @ v, b, ilu_preconditioner(L), tol=1e-10)
        assert result.converged
        np.testing.assert_allclose(L @ result.x, b, atol=1e-8)

    def test_gmres_matches_cholesky(self, rng):
        A = _spd(rng, 40)
        b = rng.standard_normal(40)
        result = gmres_solve(lambda v: A @ v, b, tol=1e-12)
        assert result.converged
        np.testing.assert_allclose(result.x, chol_solve(A, b), rtol=1e-7, atol=1e-9)


class TestSpectrumEstimates:
    def test_op_norm_identity(self):
        assert op_norm_estimate(lambda v: v, 5) == pytest.approx(1.0)

    def test_op_norm_diagonal(self):
        d = np.array([1.0, 9.0])
        assert op_norm_estimate(lambda v: d * v, 2) == pytest.approx(9.0, abs=1e-6)

    def test_op_norm_known_spectrum(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((10, 10)))
        eigs = np.concatenate([np.arange(1.0, 10.0), [20.0]])
        A = Q @ np.diag(eigs) @ Q.T
        assert op_norm_estimate(lambda v: A @ v, 10, iters=200) == pytest.approx(20.0, rel=1e-4)

    def test_min_eig_indefinite(self):
        d = np.array([-2.0, 1.0, 3.0])
        assert min_eig_estimate(lambda v: d * v, 3) == pytest.approx(-2.0, abs=1e-6)


class TestSparseDirect:
    def test_matches_dense(self, rng):
        M = sp.csr_matrix(rng.standard_normal((30, 30)) * (rng.random((30, 30)) < 0.1) + 10.0 * np.eye(30))
        b = rng.standard_normal(30)
        np.testing.assert_allclose(sparse_direct_solve(M, b), np.linalg.solve(M.toarray(), b), rtol=1e-10)

    def test_singular(self):
        with pytest.raises(NotPositiveDefiniteError):
            sparse_direct_solve(sp.csr_matrix((3, 3)), np.ones(3))
