"""Gram construction, gradient-flow solution, Euler descent, kernel regression."""

import numpy as np
import pytest

from qntk import (
    ContractViolationError,
    DivergenceError,
    KernelMatrix,
    LinearizedModel,
    Observable,
    PauliZProduct,
    ShapeMismatchError,
    default_ridge,
    flow_solution,
    gram_from_jacobian,
    kernel_regression,
    simulate_gradient_descent,
    substream,
)
from qntk.ensemble import EnsembleSpec, empirical_kernel, feature_matrix


class TestKernelMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ContractViolationError):
            KernelMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_array_protocol(self):
        k = KernelMatrix(np.eye(3), source="empirical")
        np.testing.assert_array_equal(np.asarray(k), np.eye(3))
        assert k.source == "empirical"

    def test_psd_check(self):
        k = KernelMatrix(np.diag([1.0, -0.5]))
        with pytest.raises(ContractViolationError):
            k.check_psd()


class TestGramFromJacobian:
    def test_identity(self):
        k = gram_from_jacobian(np.eye(4))
        np.testing.assert_array_equal(k.matrix, np.eye(4))

    def test_rank_one(self):
        j = np.array([[1.0, 2.0, -1.0]])  # one parameter, three points
        k = gram_from_jacobian(j).matrix
        expected = np.outer(j[0], j[0])
        np.testing.assert_allclose(k, expected, atol=1e-15)
        assert np.linalg.matrix_rank(k) == 1

    def test_matches_ensemble_kernel(self):
        enc = PauliZProduct(2)
        obs = Observable.pauli("ZZ")
        spec = EnsembleSpec.sample_haar(10, obs, enc, substream(300, 0))
        f_mat = feature_matrix(spec, np.linspace(0, 3, 5))
        from_jac = gram_from_jacobian(f_mat.T).matrix
        np.testing.assert_allclose(from_jac, empirical_kernel(f_mat).matrix, atol=1e-12)


class TestFlowSolution:
    def test_time_zero_returns_initial(self):
        rng = substream(301, 0)
        k = gram_from_jacobian(rng.standard_normal((7, 4)))
        f0, y = rng.standard_normal((2, 4))
        model = LinearizedModel(f0, k, y)
        np.testing.assert_allclose(flow_solution(model, 0.0), f0, atol=1e-12)

    def test_identity_kernel_scalar_decay(self):
        rng = substream(301, 1)
        f0, y = rng.standard_normal((2, 5))
        model = LinearizedModel(f0, KernelMatrix(np.eye(5)), y)
        for t in (0.1, 1.0, 3.0):
            np.testing.assert_allclose(
                flow_solution(model, t), y + np.exp(-t) * (f0 - y), atol=1e-12
            )

    def test_long_time_convergence(self):
        rng = substream(301, 2)
        j = rng.standard_normal((9, 4))
        k = gram_from_jacobian(j)
        lam_min = np.linalg.eigvalsh(k.matrix)[0]
        assert lam_min > 0  # overparametrized: strictly PD almost surely
        f0, y = rng.standard_normal((2, 4))
        model = LinearizedModel(f0, k, y)
        assert np.linalg.norm(flow_solution(model, 50.0 / lam_min) - y) <= 1e-8

    def test_residual_monotone(self):
        rng = substream(301, 3)
        k = gram_from_jacobian(rng.standard_normal((6, 4)))
        f0, y = rng.standard_normal((2, 4))
        model = LinearizedModel(f0, k, y)
        norms = [np.linalg.norm(flow_solution(model, t) - y) for t in (0.0, 0.1, 1.0, 10.0)]
        assert all(a >= b - 1e-12 for a, b in zip(norms, norms[1:]))

    def test_rejects_asymmetric_kernel(self):
        model = LinearizedModel(np.zeros(2), np.eye(2), np.ones(2))
        model.kernel = np.array([[1.0, 0.3], [0.0, 1.0]])  # bypass construction check
        with pytest.raises(ContractViolationError):
            flow_solution(model, 1.0)

    def test_rejects_negative_time(self):
        model = LinearizedModel(np.zeros(2), np.eye(2), np.ones(2))
        with pytest.raises(ValueError):
            flow_solution(model, -0.1)

    def test_shape_validation(self):
        with pytest.raises(ShapeMismatchError):
            LinearizedModel(np.zeros(3), np.eye(2), np.ones(2))


class TestSimulateGradientDescent:
    def test_single_step_from_zero(self):
        # a1 = eta F^T y, so f1 = eta K y
        rng = substream(302, 0)
        f_mat = rng.standard_normal((4, 9))
        y = rng.standard_normal(4)
        eta = 0.01
        traj = simulate_gradient_descent(f_mat, y, np.zeros(9), eta, 1)
        np.testing.assert_allclose(traj[0], eta * (f_mat @ f_mat.T) @ y, atol=1e-12)

    def test_stationary_at_interpolation(self):
        rng = substream(302, 1)
        f_mat = rng.standard_normal((3, 8))
        a0 = rng.standard_normal(8)
        y = f_mat @ a0
        traj = simulate_gradient_descent(f_mat, y, a0, 0.05, 10)
        for row in traj:
            np.testing.assert_allclose(row, y, atol=1e-12)

    def test_matches_flow_at_small_rate(self):
        rng = substream(302, 2)
        f_mat = rng.standard_normal((5, 30)) / np.sqrt(30)
        y = rng.standard_normal(5)
        k = gram_from_jacobian(f_mat.T)
        lam_max = np.linalg.eigvalsh(k.matrix)[-1]
        total_time = 1.0
        eta = 0.001
        assert eta * lam_max <= 0.1
        steps = round(total_time / eta)
        traj = simulate_gradient_descent(f_mat, y, np.zeros(30), eta, steps)
        exact = flow_solution(LinearizedModel(np.zeros(5), k, y), total_time)
        rel = np.linalg.norm(traj[-1] - exact) / max(np.linalg.norm(exact), 1.0)
        assert rel <= 1e-3

    def test_first_order_convergence(self):
        rng = substream(302, 3)
        f_mat = rng.standard_normal((4, 20)) / np.sqrt(20)
        y = rng.standard_normal(4)
        k = gram_from_jacobian(f_mat.T)
        exact = flow_solution(LinearizedModel(np.zeros(4), k, y), 1.0)

        def err(eta):
            steps = round(1.0 / eta)
            traj = simulate_gradient_descent(f_mat, y, np.zeros(20), eta, steps)
            return np.linalg.norm(traj[-1] - exact)

        e1, e2 = err(0.002), err(0.001)
        assert 1.7 <= e1 / e2 <= 2.3  # halving eta halves the error

    def test_divergence_guard(self):
        rng = substream(302, 4)
        f_mat = rng.standard_normal((4, 4)) * 3.0
        y = rng.standard_normal(4)
        with pytest.raises(DivergenceError):
            simulate_gradient_descent(f_mat, y, np.zeros(4), 5.0, 200)

    def test_trajectory_shape(self):
        f_mat = np.eye(3)
        traj = simulate_gradient_descent(f_mat, np.ones(3), np.zeros(3), 0.1, 7)
        assert traj.shape == (7, 3)


class TestKernelRegression:
    def test_training_point_interpolation(self):
        rng = substream(303, 0)
        j = rng.standard_normal((12, 5))
        k = gram_from_jacobian(j)
        y = rng.standard_normal(5)
        for p in range(5):
            pred = kernel_regression(k, y, k.matrix[p], ridge=0.0)
            assert pred == pytest.approx(y[p], abs=1e-8)

    def test_large_ridge_shrinks_to_zero(self):
        rng = substream(303, 1)
        k = gram_from_jacobian(rng.standard_normal((8, 4)))
        y = rng.standard_normal(4)
        pred = kernel_regression(k, y, k.matrix[0], ridge=1e12)
        assert abs(pred) <= 1e-8

    def test_singular_kernel_uses_pseudoinverse(self):
        # rank-1 kernel: prediction is the projection onto the single mode
        v = np.array([1.0, 2.0, -1.0])
        k = KernelMatrix(np.outer(v, v))
        y = np.array([1.0, 0.0, 1.0])
        pred = kernel_regression(k, y, k.matrix[0], ridge=0.0)
        # dual = v (v.y)/|v|^4 -> prediction = v_0^2 * ... finite, not NaN
        expected = float(k.matrix[0] @ (v * (v @ y) / (v @ v) ** 2))
        assert pred == pytest.approx(expected, abs=1e-10)

    def test_rejects_negative_ridge(self):
        with pytest.raises(ValueError):
            kernel_regression(np.eye(2), np.ones(2), np.ones(2), ridge=-1.0)

    def test_default_ridge_scale(self):
        k = KernelMatrix(np.diag([2.0, 4.0]))
        assert default_ridge(k) == pytest.approx(1e-8 * 3.0)
