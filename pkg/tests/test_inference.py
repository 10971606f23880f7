"""
方差估计与置信区间测试
"""

import numpy as np
import pytest
from scipy import stats

from src.core.errors import NegativeVarianceError
from src.estimators.disc import fit_theta_disc, make_partition
from src.estimators.first_stage import FirstStageFit
from src.estimators.linear import fit_theta_hat
from src.inference import (
    confidence_intervals,
    standard_errors,
    variance_disc,
    variance_semiparametric,
)
from src.models.data import Dataset, Theta, build_design


def _square(points):
    return points[:, 0] ** 2


def _design_data(rng, n, noise):
    z = rng.uniform(-1.0, 1.0, n)
    x = z ** 2 + 0.1 * rng.standard_normal(n)
    y = 1.0 + 0.5 * z + 2.0 * x + noise
    return Dataset(y=y, Z=z, X=x)


class TestSemiparametricVariance:
    def test_zero_residuals(self, rng):
        data = _design_data(rng, 60, 0.0)
        design = build_design(data, FirstStageFit.from_functions(_square))
        parts = variance_semiparametric(data, design, Theta(1.0, [0.5], [2.0]))
        np.testing.assert_allclose(parts.V_hat, 0.0, atol=1e-12)

    @pytest.mark.parametrize('homoskedastic', [False, True])
    def test_constant_residual(self, rng, homoskedastic):
        c = 0.7
        data = _design_data(rng, 60, c)
        design = build_design(data, FirstStageFit.from_functions(_square))
        parts = variance_semiparametric(data, design, Theta(1.0, [0.5], [2.0]), homoskedastic)
        expected = c ** 2 * np.linalg.inv(design.W.T @ design.W / data.n)
        np.testing.assert_allclose(parts.V_hat, expected, rtol=1e-9)

    def test_matches_dense_inverse(self, rng):
        data = _design_data(rng, 20, rng.standard_normal(20))
        fit = FirstStageFit.from_functions(_square)
        result = fit_theta_hat(data, fit)
        W = build_design(data, fit).W
        eps = data.y - data.raw_design() @ result.coef
        Sigma_inv = np.linalg.inv(W.T @ W / 20)
        Omega = (W * eps[:, None] ** 2).T @ W / 20
        np.testing.assert_allclose(result.vcov, Sigma_inv @ Omega @ Sigma_inv, rtol=1e-9)


class TestDiscVariance:
    def test_constant_squared_residual(self, rng):
        n = 200
        z = rng.uniform(-2.0, 2.0, n)
        x = np.tanh(2.0 * z)
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        data = Dataset(y=1.0 + z + x + 0.5 * signs, Z=z, X=x)
        part = make_partition(data, scheme='quantile', K=5)
        theta = Theta(1.0, [1.0], [1.0])
        parts = variance_disc(data, part, theta)
        np.testing.assert_allclose(parts.sigma2, 0.25)
        np.testing.assert_allclose(parts.V_hat, 0.25 * np.linalg.inv(parts.gram), rtol=1e-9)

    def test_coarse_partition_is_less_efficient(self, rng):
        """离散总体上，粗划分的 V_disc - V 半正定"""
        points = np.arange(6.0)
        pi = stats.norm.cdf(points - 2.0)
        copies = 20
        z = np.repeat(points, copies)
        x = np.repeat(pi, copies)
        signs = np.tile(np.where(np.arange(copies) % 2 == 0, 1.0, -1.0), points.shape[0])
        data = Dataset(y=1.0 + z + x + signs, Z=z, X=x)
        fit = FirstStageFit.from_functions(lambda p: stats.norm.cdf(p[:, 0] - 2.0))
        V = fit_theta_hat(data, fit).vcov

        for _ in range(20):
            K = int(rng.integers(3, 6))
            order = rng.permutation(6)
            groups = np.empty(6, dtype=int)
            for k, members in enumerate(np.array_split(order, K)):
                groups[members] = k
            part = make_partition(data, scheme='user', labels=groups[z.astype(int)])
            V_disc = fit_theta_disc(data, part).vcov
            smallest = np.linalg.eigvalsh(V_disc - V).min()
            assert smallest >= -1e-8 * max(1.0, np.abs(V_disc).max())


class TestIntervals:
    def test_identity_variance(self):
        theta = Theta(0.0, [0.0], [0.0])
        lower, upper = confidence_intervals(theta, np.eye(3), 100)
        np.testing.assert_allclose(lower, -0.196)
        np.testing.assert_allclose(upper, 0.196)

    def test_zero_variance(self):
        theta = Theta(1.0, [2.0], [3.0])
        lower, upper = confidence_intervals(theta, np.zeros((3, 3)), 50)
        np.testing.assert_array_equal(lower, [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(upper, [1.0, 2.0, 3.0])

    def test_negative_variance(self):
        with pytest.raises(NegativeVarianceError):
            standard_errors(np.diag([1.0, -1e-3]), 10)

    def test_tiny_negative_is_clamped(self):
        se, flags = standard_errors(np.diag([4.0, -1e-12]), 100)
        np.testing.assert_allclose(se, [0.2, 0.0])
        assert flags == ('variance_clamped',)
