"""
第一阶段非参数回归测试
"""

import numpy as np
import pytest

from src.core.errors import ConfigurationError, TooManyCellsError, UnseenPointError
from src.estimators.first_stage import (
    FirstStageConfig,
    fit_cell_means,
    fit_cubic_spline,
    fit_first_stage,
    fit_nadaraya_watson,
    loocv_score,
)
from src.estimators.first_stage.selection import select_bandwidth
from src.estimators.first_stage.smoothers import KernelSmoother, spline_knots
from src.models.data import Dataset
from src.simulation import DgpSpec, generate, true_pi


class TestCellMeans:
    def test_binary_cells(self):
        data = Dataset(y=[1.0, 2.0, 3.0, 4.0], Z=[0.0, 0.0, 1.0, 1.0], X=[0.0, 0.0, 1.0, 1.0])
        fit = fit_cell_means(data)
        np.testing.assert_array_equal(fit.pi_hat([0.0, 1.0])[:, 0], [0.0, 1.0])
        np.testing.assert_array_equal(fit.h_hat([0.0, 1.0]), [1.5, 3.5])

    def test_unseen_point(self):
        data = Dataset(y=[1.0, 2.0, 3.0, 4.0], Z=[0.0, 0.0, 1.0, 1.0], X=[0.0, 1.0, 1.0, 1.0])
        fit = fit_cell_means(data)
        with pytest.raises(UnseenPointError):
            fit.pi_hat([2.0])

    def test_too_many_cells(self, rng):
        data = Dataset(y=rng.standard_normal(5), Z=np.arange(5.0), X=rng.standard_normal(5))
        with pytest.raises(TooManyCellsError):
            fit_cell_means(data, max_cells=3)

    def test_vector_z(self, sim1_data):
        fit = fit_cell_means(sim1_data)
        rows = (sim1_data.Z[:, 0] == 1.0) & (sim1_data.Z[:, 1] == 0.0)
        expected = sim1_data.X[rows, 0].mean()
        np.testing.assert_allclose(fit.pi_hat(np.array([[1.0, 0.0]]))[0, 0], expected)


class TestNadarayaWatson:
    def test_two_point_example(self):
        smoother = KernelSmoother(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), np.array([1.0]))
        value = smoother.predict(np.array([[0.0]]))[0, 0]
        expected = np.exp(-0.5) / (1.0 + np.exp(-0.5))
        assert value == pytest.approx(expected, rel=1e-12)
        assert value == pytest.approx(0.3775, abs=1e-4)

    def test_constant_response(self, rng):
        Z = rng.standard_normal((30, 1))
        smoother = KernelSmoother(Z, np.full(30, 2.5), np.array([0.3]))
        np.testing.assert_allclose(smoother.predict(rng.standard_normal((7, 1))), 2.5, rtol=1e-12)

    def test_large_bandwidth_gives_sample_mean(self, rng):
        Z = rng.standard_normal((40, 1))
        R = rng.standard_normal(40)
        smoother = KernelSmoother(Z, R, np.array([1e6]))
        np.testing.assert_allclose(smoother.predict(np.array([[0.3]]))[0, 0], R.mean(), atol=1e-9)

    def test_linear_in_response(self, rng):
        Z = rng.standard_normal((25, 1))
        R = rng.standard_normal(25)
        smoother = KernelSmoother(Z, R, np.array([0.5]))
        np.testing.assert_allclose(smoother.smooth(3.0 * R + 2.0), 3.0 * smoother.fitted() + 2.0, atol=1e-12)

    def test_rejects_small_sample(self, rng):
        data = Dataset(y=rng.standard_normal(8), Z=rng.standard_normal(8), X=rng.standard_normal(8))
        with pytest.raises(ConfigurationError):
            fit_nadaraya_watson(data)

    def test_user_grid_is_respected(self, sim2_data):
        fit = fit_nadaraya_watson(sim2_data, grid=(0.2, 0.4, 0.8))
        assert float(fit.bandwidth[0]) in (0.2, 0.4, 0.8)
        assert fit.selection.criterion_values.shape == (3,)
        assert 'cv' in fit.describe()

    def test_constant_x_gives_constant_pi(self, rng):
        data = Dataset(y=rng.standard_normal(30), Z=rng.standard_normal(30), X=np.full(30, 0.7))
        fit = fit_nadaraya_watson(data)
        np.testing.assert_allclose(fit.pi_hat(data.Z), 0.7, rtol=1e-12)

    def test_larger_noise_gives_larger_minimum_score(self, rng):
        z = rng.uniform(-2.0, 2.0, 200)
        e = rng.standard_normal(200)
        scores = []
        for scale in (0.1, 1.0):
            data = Dataset(y=e, Z=z, X=np.sin(z) + scale * e)
            scores.append(fit_nadaraya_watson(data).selection.criterion_values.min())
        assert scores[1] > scores[0]

    @pytest.mark.slow
    def test_error_shrinks_with_sample_size(self):
        """正态 Z、二元 X 设计上，n=4000 的积分平方误差在 ≥90% 的重复中小于 n=500"""
        grid = np.linspace(-3.0, 3.0, 61)[:, None]
        truth = true_pi('sim2')(grid)

        def ise(n, seed):
            data = generate(DgpSpec('sim2', n, rho=0.5, seed=seed)).data
            selection = select_bandwidth(data.Z, data.X)
            fitted = KernelSmoother(data.Z, data.X, selection.best).predict(grid)[:, 0]
            return float(np.mean((fitted - truth) ** 2))

        improved = [ise(4000, seed) < ise(500, seed) for seed in range(50)]
        assert np.mean(improved) >= 0.9


class TestLoocv:
    def test_matches_brute_force(self):
        Z = np.array([0.0, 0.4, 1.5])
        X = np.array([1.0, -0.5, 2.0])
        data = Dataset(y=np.zeros(3), Z=Z, X=X)
        h = 0.8
        errors = []
        for i in range(3):
            others = [j for j in range(3) if j != i]
            weights = np.exp(-0.5 * ((Z[i] - Z[others]) / h) ** 2)
            errors.append(X[i] - weights @ X[others] / weights.sum())
        expected = float(np.mean(np.square(errors)))
        assert loocv_score(data, h) == pytest.approx(expected, rel=1e-10)

    def test_constant_response_scores_zero(self, rng):
        data = Dataset(y=rng.standard_normal(20), Z=rng.standard_normal(20), X=np.full(20, 3.0))
        assert loocv_score(data, 0.5) == pytest.approx(0.0, abs=1e-20)

    def test_target_h_uses_outcome(self, rng):
        data = Dataset(y=np.full(20, 1.0), Z=rng.standard_normal(20), X=rng.standard_normal(20))
        assert loocv_score(data, 0.5, target='h') == pytest.approx(0.0, abs=1e-20)
        assert loocv_score(data, 0.5, target='pi') > 0.0

    def test_rejects_non_positive_bandwidth(self, sim2_data):
        with pytest.raises(ConfigurationError):
            loocv_score(sim2_data, 0.0)


class TestCubicSpline:
    def test_reproduces_line(self, rng):
        z = rng.uniform(-2.0, 2.0, 200)
        data = Dataset(y=rng.standard_normal(200), Z=z, X=1.0 + 2.0 * z)
        fit = fit_cubic_spline(data, df=6)
        np.testing.assert_allclose(fit.pi_hat(data.Z)[:, 0], 1.0 + 2.0 * z, atol=1e-8)

    def test_interpolates_when_df_equals_n(self, rng):
        z = np.arange(12.0)
        x = rng.standard_normal(12)
        data = Dataset(y=rng.standard_normal(12), Z=z, X=x)
        fit = fit_cubic_spline(data, df=12)
        np.testing.assert_allclose(fit.pi_hat(data.Z)[:, 0], x, atol=1e-6)

    def test_cross_validated_cosine(self, rng):
        z = rng.uniform(-np.pi, np.pi, 2000)
        data = Dataset(y=rng.standard_normal(2000), Z=z, X=np.cos(z))
        fit = fit_cubic_spline(data)
        grid = np.linspace(-3.0, 3.0, 50)
        assert np.max(np.abs(fit.pi_hat(grid)[:, 0] - np.cos(grid))) < 0.01
        assert 4 <= fit.df <= 20

    def test_knot_validation(self):
        with pytest.raises(ConfigurationError):
            spline_knots(np.arange(10.0), 3)
        with pytest.raises(ConfigurationError):
            spline_knots(np.arange(5.0), 6)

    def test_rejects_vector_z(self, sim1_data):
        with pytest.raises(ConfigurationError):
            fit_cubic_spline(sim1_data)


class TestDispatch:
    def test_unknown_method(self):
        with pytest.raises(ConfigurationError):
            FirstStageConfig(method='lowess')

    def test_dispatches_by_method(self, ordinal_data):
        fit = fit_first_stage(ordinal_data, FirstStageConfig(method='cells'))
        assert fit.method == 'cells'
        assert fit.describe() == {'method': 'cells'}
