"""
线性估计量测试：θ̂、θ̂*、OLS、2SLS 与不可行估计
"""

import numpy as np
import pytest
from scipy import stats

from src.core.errors import ConfigurationError, IdentificationError, UnderIdentificationError
from src.estimators import EstimationContext, get_estimator
from src.estimators.disc import fit_theta_disc, make_partition
from src.estimators.first_stage import FirstStageConfig, FirstStageFit, fit_cell_means
from src.estimators.linear import (
    fit_infeasible,
    fit_ols,
    fit_theta_hat,
    fit_theta_star,
    fit_tsls_excluded,
)
from src.models.data import Dataset
from src.simulation import DgpSpec, generate


def _noiseless(rng, n=200):
    z = rng.uniform(-1.0, 1.0, n)
    x = z ** 2
    y = 1.0 + 0.5 * z + 2.0 * x
    return Dataset(y=y, Z=z, X=x)


def _square(points):
    return points[:, 0] ** 2


class TestThetaHat:
    def test_exact_recovery_without_noise(self, rng):
        data = _noiseless(rng)
        result = fit_theta_hat(data, FirstStageFit.from_functions(_square))
        np.testing.assert_allclose(result.coef, [1.0, 0.5, 2.0], atol=1e-8)
        np.testing.assert_allclose(result.vcov, 0.0, atol=1e-12)
        assert result.names == ('const', 'z', 'x')

    def test_matches_dense_normal_equations(self, rng):
        z = rng.standard_normal(40)
        x = np.sin(2.0 * z) + 0.3 * rng.standard_normal(40)
        data = Dataset(y=1.0 + z + x + rng.standard_normal(40), Z=z, X=x)
        fit = FirstStageFit.from_functions(lambda p: np.sin(2.0 * p[:, 0]))
        W = np.column_stack([np.ones(40), z, np.sin(2.0 * z)])
        expected = np.linalg.solve(W.T @ W, W.T @ data.y)
        np.testing.assert_allclose(fit_theta_hat(data, fit).coef, expected, rtol=1e-10)

    def test_linear_pi_is_not_identified(self, rng):
        z = rng.standard_normal(100)
        data = Dataset(y=rng.standard_normal(100), Z=z, X=z + rng.standard_normal(100))
        with pytest.raises(IdentificationError) as info:
            fit_theta_hat(data, FirstStageFit.from_functions(lambda p: 2.0 + 3.0 * p[:, 0]))
        assert info.value.eigenvalues is not None
        assert set(info.value.collinear_combination()) == {'const', 'z', 'x'}

    def test_variance_invariant_to_outcome_shift(self, rng):
        z = rng.uniform(-1.0, 1.0, 150)
        x = z ** 2 + 0.2 * rng.standard_normal(150)
        data = Dataset(y=z + x + rng.standard_normal(150), Z=z, X=x)
        fit = FirstStageFit.from_functions(_square)
        base = fit_theta_hat(data, fit)
        shifted = fit_theta_hat(data.with_outcome(data.y + 5.0), fit)
        np.testing.assert_allclose(shifted.coef[0], base.coef[0] + 5.0, rtol=1e-10)
        np.testing.assert_allclose(shifted.coef[1:], base.coef[1:], atol=1e-10)
        np.testing.assert_allclose(shifted.vcov, base.vcov, rtol=1e-8, atol=1e-12)

    def test_confidence_interval_uses_standard_error(self, sim1_data):
        result = fit_theta_hat(sim1_data, fit_cell_means(sim1_data))
        np.testing.assert_allclose(result.ci_upper - result.coef, 1.96 * result.se)
        np.testing.assert_allclose(result.se, np.sqrt(np.diag(result.vcov) / sim1_data.n))


class TestThetaStar:
    def test_constant_h_gives_constant_only(self, rng):
        data = _noiseless(rng)
        ybar = float(data.y.mean())
        fit = FirstStageFit.from_functions(_square, lambda p: np.full(p.shape[0], ybar))
        result = fit_theta_star(data, fit)
        np.testing.assert_allclose(result.coef, [ybar, 0.0, 0.0], atol=1e-10)

    def test_requires_h(self, rng):
        data = _noiseless(rng)
        with pytest.raises(ConfigurationError):
            fit_theta_star(data, FirstStageFit.from_functions(_square))


class TestDiscreteEquivalence:
    def test_three_estimators_coincide(self, sim1_data):
        fit = fit_cell_means(sim1_data)
        part = make_partition(sim1_data, scheme='element')
        theta = fit_theta_hat(sim1_data, fit)
        star = fit_theta_star(sim1_data, fit)
        disc = fit_theta_disc(sim1_data, part)
        np.testing.assert_allclose(theta.coef, star.coef, atol=1e-10)
        np.testing.assert_allclose(theta.coef, disc.coef, atol=1e-10)
        np.testing.assert_allclose(theta.vcov, disc.vcov, rtol=1e-8, atol=1e-10)

    def test_context_shares_first_stage(self, sim1_data):
        context = EstimationContext(first_stage_config=FirstStageConfig(method='cells'))
        first = get_estimator('theta').estimate(sim1_data, context)
        second = get_estimator('theta_star').estimate(sim1_data, context)
        assert context.first_stage(sim1_data) is context.first_stage(sim1_data)
        np.testing.assert_allclose(first.coef, second.coef, atol=1e-10)


class TestOls:
    def test_exact_fit_has_zero_variance(self, rng):
        z = rng.standard_normal(50)
        x = rng.standard_normal(50)
        data = Dataset(y=1.0 - z + 3.0 * x, Z=z, X=x)
        result = fit_ols(data)
        np.testing.assert_allclose(result.coef, [1.0, -1.0, 3.0], atol=1e-10)
        np.testing.assert_allclose(result.vcov, 0.0, atol=1e-12)

    def test_without_x(self, sim2_data):
        result = fit_ols(sim2_data, include_x=False)
        assert result.names == ('const', 'z')
        assert result.theta.gamma.shape == (0,)

    def test_biased_under_endogeneity(self):
        data = generate(DgpSpec('sim1', 5000, rho=0.5, seed=11)).data
        assert fit_ols(data).coefficient('x') < 0.8


class TestTsls:
    def test_matches_two_pass_oracle(self, rng):
        n = 300
        Z = rng.standard_normal((n, 2))
        u = rng.standard_normal(n)
        x = Z[:, 1] + u
        y = 1.0 + Z[:, 0] + 2.0 * x + 0.5 * u + rng.standard_normal(n)
        data = Dataset(y=y, Z=Z, X=x)
        result = fit_tsls_excluded(data, excluded=[1])

        instruments = np.column_stack([np.ones(n), Z])
        regressors = np.column_stack([np.ones(n), Z[:, 0], x])
        fitted = instruments @ np.linalg.lstsq(instruments, regressors, rcond=None)[0]
        expected = np.linalg.lstsq(fitted, y, rcond=None)[0]
        np.testing.assert_allclose(result.coef, expected, rtol=1e-10)
        assert result.names == ('const', 'z1', 'x')
        assert result.extras['excluded'] == ['z2']

    def test_under_identified(self, rng):
        data = Dataset(y=rng.standard_normal(50), Z=rng.standard_normal(50), X=rng.standard_normal((50, 2)))
        with pytest.raises(UnderIdentificationError):
            fit_tsls_excluded(data)

    def test_weak_first_stage_flag(self):
        data = generate(DgpSpec('sim3', 2000, rho=0.5, seed=11)).data
        result = fit_tsls_excluded(data)
        assert 'weak_first_stage' in result.flags
        assert result.extras['min_canonical_correlation'] < 0.1

    def test_strong_first_stage(self):
        data = generate(DgpSpec('sim2', 1000, rho=0.5, seed=2)).data
        result = fit_tsls_excluded(data)
        assert 'weak_first_stage' not in result.flags


class TestInfeasible:
    def test_exact_with_true_pi(self, rng):
        data = _noiseless(rng)
        result = fit_infeasible(data, _square)
        np.testing.assert_allclose(result.coef, [1.0, 0.5, 2.0], atol=1e-8)

    def test_requires_true_pi(self, sim1_data):
        with pytest.raises(ConfigurationError):
            get_estimator('infeasible').estimate(sim1_data, EstimationContext())

    def test_simulation_truth_is_close(self):
        sample = generate(DgpSpec('sim1', 4000, rho=0.5, seed=4))
        result = fit_infeasible(sample.data, sample.pi0)
        assert abs(result.coefficient('x') - 1.0) < 4 * result.se[-1] + 1e-3
        assert stats.norm.cdf(1.0) == pytest.approx(float(sample.pi0(np.array([[1.0, 1.0]]))[0]))


class TestRegistry:
    def test_unknown_tag(self):
        with pytest.raises(ConfigurationError):
            get_estimator('lasso')

    def test_nonlinear_star_tag(self):
        assert get_estimator('nonlinear_star').tag == 'nonlinear_star'
