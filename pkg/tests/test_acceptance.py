"""
蒙特卡洛验收测试
运行时间较长，用 pytest -m "not slow" 跳过
"""

import numpy as np
import pytest
from scipy import stats

from src.core.config import get_default_threads
from src.estimators.first_stage import FirstStageConfig, fit_cell_means
from src.estimators.linear import fit_theta_hat
from src.estimators.nonlinear import exp_index, fit_nonlinear, fit_quantile
from src.models.data import Dataset
from src.simulation import DgpSpec, generate, run_mc, sim1_support, true_pi

pytestmark = pytest.mark.slow

CELLS = FirstStageConfig(method='cells')


def _coverage_band(low, high, widen=1.0):
    center, half = 0.5 * (low + high), 0.5 * (high - low)
    return center - widen * half, center + widen * half


class TestBinaryDesign:
    """两个二元 Z、二元 X，单元格均值第一阶段"""

    @pytest.fixture(scope='class')
    def summary(self):
        spec = DgpSpec('sim1', 1000, rho=0.5, beta0=(1.0,), seed=2024)
        return run_mc(
            spec, 2000, estimators=('theta', 'theta_star', 'disc', 'ols'), threads=get_default_threads()
        )

    @pytest.mark.parametrize('estimator', ['theta', 'theta_star', 'disc'])
    def test_semiparametric_rows(self, summary, estimator):
        row = summary.row(estimator, 'x')
        assert abs(row.bias) <= 0.02
        assert 0.08 <= row.sd <= 0.11
        assert 0.93 <= row.cp <= 0.97

    def test_ols_is_biased(self, summary):
        row = summary.row('ols', 'x')
        assert -0.52 <= row.bias <= -0.45
        assert row.cp <= 0.01

    def test_rmse_identity(self, summary):
        for row in summary.rows:
            assert row.rmse ** 2 == pytest.approx(row.bias ** 2 + row.sd ** 2, rel=1e-8)


class TestNormalDesign:
    """正态 Z、二元 X，核回归第一阶段，十分位划分；B 减为 500，覆盖率区间放宽 1.5 倍"""

    @pytest.fixture(scope='class')
    def summary(self):
        spec = DgpSpec('sim2', 500, rho=0.5, beta0=(1.0,), seed=2024)
        return run_mc(spec, 500, estimators=('theta', 'disc', 'tsls'), threads=get_default_threads())

    def test_disc_row(self, summary):
        row = summary.row('disc', 'x')
        low, high = _coverage_band(0.92, 0.97, widen=1.5)
        assert abs(row.bias) <= 0.04
        assert low <= row.cp <= high

    def test_theta_row(self, summary):
        assert 0.0 <= summary.row('theta', 'x').bias <= 0.08

    def test_tsls_violates_exclusion(self, summary):
        assert 4.5 <= summary.row('tsls', 'x').bias <= 5.8


class TestUniformDesign:
    """均匀 Z、连续 X，π₀ = cos，样条第一阶段"""

    @pytest.fixture(scope='class')
    def summary(self):
        spec = DgpSpec('sim3', 1000, rho=0.5, beta0=(1.0,), seed=2024)
        return run_mc(spec, 500, estimators=('disc', 'ols', 'tsls'), threads=get_default_threads())

    def test_disc_row(self, summary):
        row = summary.row('disc', 'x')
        assert abs(row.bias) <= 0.02
        assert 0.90 <= row.cp <= 0.97

    def test_ols_row(self, summary):
        assert 0.28 <= summary.row('ols', 'x').bias <= 0.35

    def test_tsls_blows_up(self, summary):
        assert summary.row('tsls', 'x').sd > 50.0


class TestInfluenceFunction:
    def test_empirical_covariance_matches_sandwich(self):
        """√n(θ̂ - θ₀) 的经验协方差与 Σ₀⁻¹Ω₀Σ₀⁻¹ 一致；ε 与 Z 独立且单位方差，故 Ω₀ = Σ₀"""
        n, B = 2000, 2000
        spec = DgpSpec('sim1', n, rho=0.5, seed=77)
        theta0 = spec.theta0.to_vector()
        draws = np.empty((B, theta0.shape[0]))
        for b in range(B):
            data = generate(spec, b).data
            draws[b] = np.sqrt(n) * (fit_theta_hat(data, fit_cell_means(data)).coef - theta0)

        points, probs = sim1_support()
        W = np.column_stack([np.ones(4), points, true_pi('sim1')(points)])
        Sigma0 = (W * probs[:, None]).T @ W
        expected = np.linalg.inv(Sigma0)
        empirical = np.cov(draws, rowvar=False, bias=True)

        scale = np.sqrt(np.outer(np.diag(expected), np.diag(expected)))
        assert np.all(np.abs(empirical - expected) <= 0.15 * scale)


def _discrete_design(seed, n=4000):
    """
    Z 取 9 个等距点，X = Z² + u，(ε, u) 相关；ε 的条件中位数与条件均值都为 0
    """
    rng = np.random.default_rng(seed)
    z = rng.choice(np.linspace(-2.0, 2.0, 9), size=n)
    eps = rng.standard_normal(n)
    u = 0.5 * (0.5 * eps + np.sqrt(0.75) * rng.standard_normal(n))
    x = z ** 2 + u
    return Dataset(y=1.0 + z + x + eps, Z=z, X=x)


def _binary_exp_design(seed, n=4000):
    """
    Z 取 9 个等距点，X = 1{Z² - 1 ≥ v}，π(z) = Φ(z² - 1)；(ε, v) 相关，Y = exp(0.5 + X) + ε
    """
    rng = np.random.default_rng(seed)
    z = rng.choice(np.linspace(-2.0, 2.0, 9), size=n)
    eps = rng.standard_normal(n)
    v = 0.5 * eps + np.sqrt(0.75) * rng.standard_normal(n)
    x = (z ** 2 - 1.0 >= v).astype(float)
    return Dataset(y=np.exp(0.5 + x) + eps, Z=z, X=x)


class TestExtensions:
    def test_median_recovery(self):
        truth = np.array([1.0, 1.0, 1.0])
        errors = [
            np.max(np.abs(fit_quantile(_discrete_design(seed), 0.5, CELLS).coef - truth))
            for seed in range(20)
        ]
        assert np.median(errors) <= 0.15

    def test_exp_index_recovery(self):
        model = exp_index(1, 1, include_z=False, names=('const', 'x'))
        truth = np.array([0.5, 1.0])
        errors = []
        for seed in range(20):
            result = fit_nonlinear(_binary_exp_design(seed), model, CELLS)
            assert np.all(np.isfinite(result.se))
            errors.append(np.max(np.abs(result.coef - truth)))
        assert np.median(errors) < 0.1

    def test_upper_quantile_shifts_intercept(self):
        """给定 Z 时 ε ~ N(0, 1)，τ 分位数的截距平移为 Φ⁻¹(τ)"""
        data = _discrete_design(11)
        tau = 0.75
        result = fit_quantile(data, tau, CELLS)
        shift = result.coef[0] - 1.0
        assert shift == pytest.approx(stats.norm.ppf(tau), abs=0.15)
