import numpy as np
import pytest

from ukfse import s3
from ukfse.errors import ChartDomainError, ConvergenceError


def random_unit(rng, n=None):
    q = rng.standard_normal((n, 4) if n else 4)
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def axis_angle_matrix(axis, angle):
    """Rodrigues rotation formula, the independent oracle for rotation_matrix."""
    axis = np.asarray(axis) / np.linalg.norm(axis)
    K = np.array(
        [[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]]
    )
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


class TestLambdaMatrix:
    def test_identity_quaternion(self):
        np.testing.assert_array_equal(s3.lambda_matrix([1.0, 0, 0, 0]), np.eye(4))

    def test_orthogonal_for_unit_q(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            q = random_unit(rng)
            L = s3.lambda_matrix(q)
            np.testing.assert_allclose(L.T @ L, np.eye(4), atol=1e-14)

    def test_is_left_multiplication(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            q = rng.standard_normal(4)
            p = rng.standard_normal(4)
            np.testing.assert_allclose(
                s3.lambda_matrix(q) @ p, s3.quat_multiply(q, p), atol=1e-14
            )

    def test_orthogonality_identity(self):
        # <q, Lambda(q) [0; w]> = 0 for arbitrary q, w
        rng = np.random.default_rng(2)
        for _ in range(50):
            q = rng.standard_normal(4)
            w = np.concatenate([[0.0], rng.standard_normal(3)])
            assert abs(q @ (s3.lambda_matrix(q) @ w)) < 1e-13

    def test_norm_identity(self):
        # ||Lambda(q) [0; w]||^2 = ||q||^2 ||w||^2
        rng = np.random.default_rng(3)
        for _ in range(50):
            q = rng.standard_normal(4)
            w = rng.standard_normal(3)
            lhs = np.sum((s3.lambda_matrix(q) @ np.concatenate([[0.0], w])) ** 2)
            rhs = np.sum(q**2) * np.sum(w**2)
            assert abs(lhs - rhs) <= 1e-12 * (1 + rhs)


class TestRotationMatrix:
    def test_identity(self):
        np.testing.assert_array_equal(s3.rotation_matrix([1.0, 0, 0, 0]), np.eye(3))

    def test_so3_for_unit_q(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            R = s3.rotation_matrix(random_unit(rng))
            np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-12)
            assert abs(np.linalg.det(R) - 1.0) < 1e-12

    def test_against_axis_angle_oracle(self):
        q = np.array([np.cos(np.pi / 4), np.sin(np.pi / 4), 0.0, 0.0])
        np.testing.assert_allclose(
            s3.rotation_matrix(q), axis_angle_matrix([1, 0, 0], np.pi / 2), atol=1e-15
        )

    def test_random_axis_angle_oracle(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            axis = rng.standard_normal(3)
            axis /= np.linalg.norm(axis)
            angle = rng.uniform(-np.pi, np.pi)
            q = np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])
            np.testing.assert_allclose(
                s3.rotation_matrix(q), axis_angle_matrix(axis, angle), atol=1e-13
            )

    def test_batched_matches_single(self):
        rng = np.random.default_rng(6)
        Q = random_unit(rng, 7)
        batch = s3.rotation_matrix(Q)
        for i in range(7):
            np.testing.assert_array_equal(batch[i], s3.rotation_matrix(Q[i]))


class TestQuatMultiply:
    def test_group_identity(self):
        rng = np.random.default_rng(7)
        b = rng.standard_normal(4)
        np.testing.assert_array_equal(s3.quat_multiply([1, 0, 0, 0], b), b)

    def test_ij_equals_k(self):
        np.testing.assert_array_equal(
            s3.quat_multiply([0, 1, 0, 0], [0, 0, 1, 0]), [0.0, 0, 0, 1]
        )

    def test_norm_multiplicative(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            a, b = rng.standard_normal(4), rng.standard_normal(4)
            lhs = np.linalg.norm(s3.quat_multiply(a, b))
            rhs = np.linalg.norm(a) * np.linalg.norm(b)
            assert abs(lhs - rhs) < 1e-12 * (1 + rhs)


class TestProjection:
    def test_formula_basic(self):
        np.testing.assert_array_equal(
            s3.project_formula([2.0, 0, 0, 0]), [1.0, 0, 0, 0]
        )

    def test_formula_idempotent(self):
        rng = np.random.default_rng(9)
        q = random_unit(rng)
        np.testing.assert_allclose(s3.project_formula(q), q, atol=1e-15)

    def test_formula_unit_norm(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            q = random_unit(rng) * rng.uniform(0.5, 2.0)
            assert abs(np.linalg.norm(s3.project_formula(q)) - 1.0) < 1e-15

    def test_formula_rejects_near_zero(self):
        with pytest.raises(ConvergenceError):
            s3.project_formula(np.zeros(4))

    def test_optimize_matches_formula(self):
        # On the sphere the projection is analytically the normalization.
        rng = np.random.default_rng(11)
        for _ in range(30):
            q = random_unit(rng) * rng.uniform(0.5, 2.0)
            np.testing.assert_allclose(
                s3.project_optimize(q), s3.project_formula(q), atol=1e-9
            )

    def test_optimize_unit_input_immediate(self):
        q = np.array([0.5, 0.5, 0.5, 0.5])
        np.testing.assert_array_equal(s3.project_optimize(q), q)

    def test_optimize_non_convergence_reported(self):
        with pytest.raises(ConvergenceError):
            s3.project_optimize(np.array([2.0, 0, 0, 0]), max_iter=0)


class TestLieChart:
    def test_log_identity(self):
        np.testing.assert_array_equal(s3.lie_log([1.0, 0, 0, 0]), np.zeros(3))

    def test_log_hand_value(self):
        q = np.array([np.cos(0.3), np.sin(0.3), 0.0, 0.0])
        np.testing.assert_allclose(s3.lie_log(q), [0.3, 0, 0], atol=1e-15)

    def test_exp_zero(self):
        np.testing.assert_array_equal(s3.lie_exp(np.zeros(3)), [1.0, 0, 0, 0])

    def test_exp_hand_value(self):
        np.testing.assert_allclose(
            s3.lie_exp([np.pi / 2, 0, 0]), [0.0, 1.0, 0, 0], atol=1e-15
        )

    def test_exp_unit_norm(self):
        rng = np.random.default_rng(12)
        v = rng.standard_normal((50, 3)) * 2.0
        assert np.max(np.abs(np.linalg.norm(s3.lie_exp(v), axis=-1) - 1.0)) < 1e-14

    def test_round_trip_log_exp(self):
        rng = np.random.default_rng(13)
        v = rng.standard_normal((50, 3))
        v *= (rng.uniform(0, np.pi / 2 * 0.99, 50) / np.linalg.norm(v, axis=1))[:, None]
        np.testing.assert_allclose(s3.lie_log(s3.lie_exp(v)), v, atol=1e-12)

    def test_round_trip_exp_log_front_hemisphere(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            q = random_unit(rng)
            if q[0] <= 0:
                q = -q
            np.testing.assert_allclose(s3.lie_exp(s3.lie_log(q)), q, atol=1e-12)

    def test_equator_gives_pi_over_2(self):
        q = np.array([0.0, 0.6, 0.8, 0.0])
        assert abs(np.linalg.norm(s3.lie_log(q)) - np.pi / 2) < 1e-14

    def test_antipode_rejected(self):
        with pytest.raises(ChartDomainError):
            s3.lie_log([-1.0, 0, 0, 0])


class TestRiemannChart:
    def test_log_at_base(self):
        rng = np.random.default_rng(15)
        mu = random_unit(rng)
        np.testing.assert_allclose(s3.riem_log(mu, mu), np.zeros(4), atol=1e-15)

    def test_log_norm_is_geodesic_distance(self):
        rng = np.random.default_rng(16)
        for _ in range(50):
            mu, q = random_unit(rng), random_unit(rng)
            if q @ mu <= -1 + 1e-6:
                continue
            u = s3.riem_log(mu, q)
            assert abs(np.linalg.norm(u) - np.arccos(np.clip(q @ mu, -1, 1))) < 1e-12

    def test_log_is_tangent(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            mu, q = random_unit(rng), random_unit(rng)
            if q @ mu <= -1 + 1e-6:
                continue
            assert abs(s3.riem_log(mu, q) @ mu) < 1e-9

    def test_round_trip(self):
        rng = np.random.default_rng(18)
        for _ in range(50):
            mu, q = random_unit(rng), random_unit(rng)
            if q @ mu <= -0.99:
                continue
            np.testing.assert_allclose(
                s3.riem_exp(mu, s3.riem_log(mu, q)), q, atol=1e-12
            )

    def test_exp_zero_is_base(self):
        rng = np.random.default_rng(19)
        mu = random_unit(rng)
        np.testing.assert_array_equal(s3.riem_exp(mu, np.zeros(4)), mu)

    def test_exp_unit_norm(self):
        rng = np.random.default_rng(20)
        for _ in range(30):
            mu = random_unit(rng)
            u = rng.standard_normal(4)
            u -= mu * (u @ mu)
            assert abs(np.linalg.norm(s3.riem_exp(mu, u)) - 1.0) < 1e-14

    def test_exp_pi_reaches_antipode(self):
        rng = np.random.default_rng(21)
        mu = random_unit(rng)
        u = rng.standard_normal(4)
        u -= mu * (u @ mu)
        u *= np.pi / np.linalg.norm(u)
        np.testing.assert_allclose(s3.riem_exp(mu, u), -mu, atol=1e-12)

    def test_antipodal_rejected(self):
        with pytest.raises(ChartDomainError):
            s3.riem_log(np.array([1.0, 0, 0, 0]), np.array([-1.0, 0, 0, 0]))


class TestTangentBasis:
    def test_orthonormal_and_tangent(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            q = random_unit(rng)
            B = s3.tangent_basis(q)
            np.testing.assert_allclose(B.T @ B, np.eye(3), atol=1e-14)
            np.testing.assert_allclose(B.T @ q, np.zeros(3), atol=1e-14)

    def test_batched(self):
        rng = np.random.default_rng(23)
        Q = random_unit(rng, 5)
        B = s3.tangent_basis(Q)
        assert B.shape == (5, 4, 3)
        np.testing.assert_array_equal(B[2], s3.tangent_basis(Q[2]))


class TestKarcherMean:
    def test_identical_points(self):
        rng = np.random.default_rng(24)
        q = random_unit(rng)
        pts = np.tile(q, (5, 1))
        w = np.full(5, 0.2)
        np.testing.assert_allclose(s3.karcher_mean(pts, w), q, atol=1e-15)

    def test_two_point_midpoint(self):
        rng = np.random.default_rng(25)
        mu = random_unit(rng)
        u = rng.standard_normal(4)
        u -= mu * (u @ mu)
        u *= 0.4 / np.linalg.norm(u)
        a, b = s3.riem_exp(mu, u), s3.riem_exp(mu, -u)
        mid = s3.karcher_mean(np.stack([a, b]), np.array([0.5, 0.5]))
        d_a = s3.geodesic_distance(mid, a)
        d_b = s3.geodesic_distance(mid, b)
        assert abs(d_a - d_b) < 1e-10

    def test_grid_search_oracle(self):
        # Cluster inside a 2-parameter geodesic patch; brute-force the weighted
        # objective on that patch and compare with the fixed-point solution.
        rng = np.random.default_rng(26)
        base = random_unit(rng)
        B = s3.tangent_basis(base)
        u1, u2 = B[:, 0], B[:, 1]
        coeffs = rng.uniform(-0.05, 0.05, size=(6, 2))
        pts = np.stack([s3.riem_exp(base, a * u1 + b * u2) for a, b in coeffs])
        w = rng.uniform(0.5, 1.5, 6)
        w /= w.sum()
        mu = s3.karcher_mean(pts, w)

        def objective(m):
            return float(w @ s3.geodesic_distance(m, pts) ** 2)

        grid = np.linspace(-0.06, 0.06, 81)
        best_val, best_ab = np.inf, None
        for a in grid:
            for b in grid:
                val = objective(s3.riem_exp(base, a * u1 + b * u2))
                if val < best_val:
                    best_val, best_ab = val, (a, b)
        assert objective(mu) <= best_val + 1e-10
        grid_mu = s3.riem_exp(base, best_ab[0] * u1 + best_ab[1] * u2)
        assert s3.geodesic_distance(mu, grid_mu) < 2 * (grid[1] - grid[0])

    def test_signed_weights(self):
        # Sigma-point style weights: huge negative center, positive off-center.
        rng = np.random.default_rng(27)
        base = random_unit(rng)
        B = s3.tangent_basis(base)
        n = 12
        w = np.full(n + 1, 250.0 / 3000.0)
        w[0] = 1.0 - n * w[1]
        offsets = 1e-3 * rng.standard_normal((n + 1, 3))
        offsets[0] = 0.0
        pts = np.stack([s3.riem_exp(base, B @ c) for c in offsets])
        mu = s3.karcher_mean(pts, w)
        chart_mean = w @ offsets
        expected = s3.riem_exp(base, B @ chart_mean)
        assert s3.geodesic_distance(mu, expected) < 1e-7

    def test_weight_sum_validated(self):
        rng = np.random.default_rng(28)
        pts = random_unit(rng, 3)
        with pytest.raises(ConvergenceError):
            s3.karcher_mean(pts, np.array([0.5, 0.5, 0.5]))

    def test_degenerate_initialization_reported(self):
        q = np.array([1.0, 0, 0, 0])
        pts = np.stack([q, -q])
        with pytest.raises(ConvergenceError):
            s3.karcher_mean(pts, np.array([0.5, 0.5]))
