"""
模拟数据生成与蒙特卡洛汇总测试
"""

import numpy as np
import pytest
from scipy import stats

from src.core.errors import ConfigurationError
from src.estimators.disc import PartitionConfig
from src.simulation import (
    DgpSpec,
    generate,
    run_mc,
    run_replication,
    sim1_support,
    summarize_draws,
    true_pi,
)
from src.simulation.dgp import correlated_errors, replication_rng
from src.simulation.harness import default_first_stage, default_partition


class TestDgpSpec:
    @pytest.mark.parametrize(
        'kwargs',
        [
            {'family': 'sim4', 'n': 100},
            {'family': 'sim1', 'n': 100, 'rho': 1.5},
            {'family': 'sim2', 'n': 10},
            {'family': 'sim2', 'n': 100, 'beta0': (1.0, 2.0)},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ConfigurationError):
            DgpSpec(**kwargs)

    def test_beta_is_broadcast(self):
        spec = DgpSpec('sim1', 100, beta0=(0.5,))
        np.testing.assert_array_equal(spec.beta, [0.5, 0.5])
        np.testing.assert_array_equal(spec.theta0.to_vector(), [1.0, 0.5, 0.5, 1.0])


class TestGenerate:
    def test_reproducible(self):
        spec = DgpSpec('sim3', 200, rho=0.5, seed=9)
        first, second = generate(spec, 3), generate(spec, 3)
        np.testing.assert_array_equal(first.data.y, second.data.y)
        np.testing.assert_array_equal(first.data.Z, second.data.Z)
        assert not np.array_equal(first.data.y, generate(spec, 4).data.y)

    def test_streams_are_separate(self):
        independent = generate(DgpSpec('sim3', 200, rho=0.0, seed=1))
        correlated = generate(DgpSpec('sim3', 200, rho=0.8, seed=1))
        np.testing.assert_array_equal(independent.data.Z, correlated.data.Z)

        def eps(sample):
            return sample.data.y - 1.0 - sample.data.Z[:, 0] - sample.data.X[:, 0]

        np.testing.assert_allclose(eps(independent), eps(correlated), atol=1e-12)

    def test_sim1_design(self):
        sample = generate(DgpSpec('sim1', 400, rho=0.5, seed=2))
        assert set(np.unique(sample.data.Z)) <= {0.0, 1.0}
        assert set(np.unique(sample.data.X)) <= {0.0, 1.0}
        points, probs = sim1_support()
        np.testing.assert_allclose(
            sample.pi0(points), stats.norm.cdf([1.0, -1.0, -1.0, 1.0])
        )
        np.testing.assert_allclose(probs, 0.25)
        assert sample.truth == {'const': 1.0, 'z1': 1.0, 'z2': 1.0, 'x': 1.0}

    def test_sim2_z_scale(self):
        sample = generate(DgpSpec('sim2', 20000, seed=4))
        assert sample.data.Z[:, 0].std() == pytest.approx(2.0, rel=0.03)
        np.testing.assert_allclose(true_pi('sim2')(np.array([0.0, 1.0])), stats.norm.cdf([0.0, 2.0]))

    def test_sim3_h0(self):
        sample = generate(DgpSpec('sim3', 100, seed=4))
        z = np.linspace(-3.0, 3.0, 7)
        np.testing.assert_allclose(sample.h0(z), 1.0 + z + np.cos(z))

    def test_sim1_independent_errors(self):
        sample = generate(DgpSpec('sim1', 10000, rho=0.0, seed=8))
        eps = sample.data.y - sample.data.raw_design() @ sample.theta0.to_vector()
        u_proxy = sample.data.X[:, 0] - sample.pi0(sample.data.Z)
        assert abs(np.corrcoef(eps, u_proxy)[0, 1]) < 0.05

    def test_sim2_treatment_share(self):
        sample = generate(DgpSpec('sim2', 10000, rho=0.5, seed=8))
        assert sample.data.X.mean() == pytest.approx(0.5, abs=0.02)

    def test_sim3_local_mean(self):
        sample = generate(DgpSpec('sim3', 10000, rho=0.5, seed=8))
        near_zero = np.abs(sample.data.Z[:, 0]) < 0.2
        assert sample.data.X[near_zero, 0].mean() == pytest.approx(1.0, abs=0.1)

    def test_error_correlation(self):
        rng = replication_rng(0, 0, 0)
        eps, u = correlated_errors(rng, 20000, 0.5)
        assert np.corrcoef(eps, u)[0, 1] == pytest.approx(0.5, abs=0.03)
        eps, u = correlated_errors(replication_rng(0, 0, 0), 10, 1.0)
        np.testing.assert_allclose(u, eps)


class TestSummary:
    def test_hand_computed(self):
        estimates = np.array([[1.0], [3.0]])
        lower = np.array([[0.5], [2.0]])
        upper = np.array([[1.5], [4.0]])
        result = summarize_draws(estimates, lower, upper, np.array([1.0]))
        assert result['bias'][0] == pytest.approx(1.0)
        assert result['sd'][0] == pytest.approx(1.0)
        assert result['rmse'][0] == pytest.approx(np.sqrt(2.0))
        assert result['cp'][0] == pytest.approx(0.5)
        assert result['median_bias'][0] == pytest.approx(1.0)
        assert result['median_abs_error'][0] == pytest.approx(1.0)

    def test_rmse_decomposition(self, rng):
        estimates = rng.standard_normal((50, 3)) + 0.2
        truth = np.zeros(3)
        result = summarize_draws(estimates, estimates - 1.0, estimates + 1.0, truth)
        np.testing.assert_allclose(result['rmse'] ** 2, result['bias'] ** 2 + result['sd'] ** 2)


class TestHarness:
    def test_defaults_by_family(self):
        assert default_first_stage('sim1').method == 'cells'
        assert default_first_stage('sim2').method == 'nw'
        assert default_first_stage('sim3').method == 'spline'
        assert default_partition('sim1').scheme == 'element'
        assert default_partition('sim3').K == 10

    def test_rejects_bad_arguments(self):
        spec = DgpSpec('sim1', 100)
        with pytest.raises(ConfigurationError):
            run_mc(spec, 0)
        with pytest.raises(ConfigurationError):
            run_mc(spec, 2, threads=0)
        with pytest.raises(ConfigurationError):
            run_mc(spec, 2, estimators=('lasso',))

    def test_summary_layout(self):
        spec = DgpSpec('sim1', 200, rho=0.5, seed=1)
        summary = run_mc(spec, 4, estimators=('theta', 'ols'))
        assert len(summary.rows) == 8
        record = summary.to_records()[0]
        assert record['estimator'] == 'theta'
        assert record['coef'] == 'const'
        assert record['replications'] == 4
        assert record['failures'] == 0

    def test_thread_count_does_not_change_results(self):
        spec = DgpSpec('sim1', 200, rho=0.5, seed=1)
        serial = run_mc(spec, 4, estimators=('theta', 'disc'), threads=1)
        parallel = run_mc(spec, 4, estimators=('theta', 'disc'), threads=2)
        assert serial.to_records() == parallel.to_records()

    def test_replication_matches_direct_call(self):
        spec = DgpSpec('sim1', 200, rho=0.5, seed=1)
        outcome = run_replication(
            spec, 2, ('theta',), default_first_stage('sim1'), default_partition('sim1')
        )
        again = run_replication(
            spec, 2, ('theta',), default_first_stage('sim1'), default_partition('sim1')
        )
        np.testing.assert_array_equal(outcome.draws['theta'][1], again.draws['theta'][1])

    def test_failing_estimator_is_counted(self):
        spec = DgpSpec('sim1', 100, seed=1)
        summary = run_mc(
            spec, 3, estimators=('theta', 'disc'), partition=PartitionConfig(scheme='quantile')
        )
        assert summary.failures == {'theta': 0, 'disc': 3}
        assert summary.unavailable == ('disc',)
        assert {r.estimator for r in summary.rows} == {'theta'}
