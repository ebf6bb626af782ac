import numpy as np
import pytest

from ukfse.errors import CovarianceError
from ukfse.numerics import Rng, cholesky_sqrt, sample_gaussian, symmetrize


class TestCholeskySqrt:
    def test_identity(self):
        np.testing.assert_array_equal(cholesky_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        S = cholesky_sqrt(np.diag([4.0, 9.0]))
        np.testing.assert_allclose(S, np.diag([2.0, 3.0]), atol=1e-15)

    def test_random_spd_reconstructs(self):
        rng = np.random.default_rng(11)
        A = rng.standard_normal((5, 5))
        P = A @ A.T
        S = cholesky_sqrt(P)
        assert np.max(np.abs(S @ S.T - P)) < 1e-10
        assert np.allclose(np.triu(S, 1), 0.0)

    @pytest.mark.parametrize("n", range(1, 11))
    def test_spd_reconstruction_up_to_10(self, n):
        rng = np.random.default_rng(100 + n)
        A = rng.standard_normal((n, n))
        P = A @ A.T
        S = cholesky_sqrt(P)
        scale = 1.0 + np.max(np.abs(P))
        assert np.max(np.abs(S @ S.T - P)) < 1e-10 * scale

    def test_zero_matrix(self):
        S = cholesky_sqrt(np.zeros((4, 4)))
        np.testing.assert_array_equal(S, np.zeros((4, 4)))

    def test_singular_psd(self):
        rng = np.random.default_rng(2)
        A = rng.standard_normal((4, 2))
        P = A @ A.T  # rank 2
        S = cholesky_sqrt(P)
        assert np.max(np.abs(S @ S.T - P)) < 1e-10 * (1 + np.max(np.abs(P)))

    def test_tiny_negative_eigenvalue_clamped(self):
        rng = np.random.default_rng(3)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        P = symmetrize(Q @ np.diag([1.0, 0.5, -5e-11]) @ Q.T)
        S = cholesky_sqrt(P)
        assert np.max(np.abs(S @ S.T - P)) < 1e-9

    def test_asymmetric_rejected(self):
        with pytest.raises(CovarianceError):
            cholesky_sqrt(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_negative_eigenvalue_rejected(self):
        with pytest.raises(CovarianceError):
            cholesky_sqrt(np.diag([1.0, -1e-6]))


class TestSymmetrize:
    def test_symmetric_unchanged(self):
        P = np.array([[2.0, 0.5], [0.5, 3.0]])
        np.testing.assert_array_equal(symmetrize(P), P)

    def test_direct_average(self):
        out = symmetrize(np.array([[1.0, 2.0], [0.0, 1.0]]))
        np.testing.assert_array_equal(out, np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        P = rng.standard_normal((6, 6))
        once = symmetrize(P)
        np.testing.assert_array_equal(symmetrize(once), once)

    def test_output_is_symmetric(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            out = symmetrize(rng.standard_normal((4, 4)))
            assert np.max(np.abs(out - out.T)) == 0.0


class TestRng:
    def test_same_seed_bit_identical(self):
        a = Rng(123).standard_normal(100)
        b = Rng(123).standard_normal(100)
        np.testing.assert_array_equal(a, b)

    def test_substream_keyed_by_index(self):
        a = Rng(9).substream(4, 1).standard_normal(8)
        b = Rng(9).substream(4, 1).standard_normal(8)
        c = Rng(9).substream(5, 1).standard_normal(8)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_substreams_independent_of_draw_order(self):
        root = Rng(7)
        root.standard_normal(1000)  # advancing the parent must not affect children
        a = root.substream(2).standard_normal(4)
        b = Rng(7).substream(2).standard_normal(4)
        np.testing.assert_array_equal(a, b)


class TestSampleGaussian:
    def test_zero_covariance_returns_mean_exactly(self):
        mean = np.array([1.0, -2.0, 3.0])
        out = sample_gaussian(mean, np.zeros((3, 3)), Rng(0))
        np.testing.assert_array_equal(out, mean)

    def test_determinism(self):
        mean = np.zeros(2)
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        a = sample_gaussian(mean, cov, Rng(42))
        b = sample_gaussian(mean, cov, Rng(42))
        np.testing.assert_array_equal(a, b)

    def test_law_of_large_numbers(self):
        rng = Rng(1)
        n = 100_000
        total = np.zeros(3)
        for _ in range(n):
            total += sample_gaussian(np.zeros(3), np.eye(3), rng)
        assert np.all(np.abs(total / n) < 0.02)

    def test_dimension_mismatch(self):
        with pytest.raises(CovarianceError):
            sample_gaussian(np.zeros(2), np.eye(3), Rng(0))
