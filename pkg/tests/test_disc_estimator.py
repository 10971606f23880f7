"""
支撑集划分与离散化估计量测试
"""

import numpy as np
import pytest

from src.core.errors import (
    ConfigurationError,
    IdentificationError,
    OrderConditionError,
    TooManyCellsError,
)
from src.estimators import EstimationContext, get_estimator
from src.estimators.disc import (
    PartitionConfig,
    fit_theta_disc,
    make_partition,
    partition_from_config,
)
from src.models.data import Dataset


def _continuous(rng, n=120):
    z = rng.uniform(-2.0, 2.0, n)
    x = np.tanh(2.0 * z) + 0.3 * rng.standard_normal(n)
    y = 1.0 + 0.5 * z + x + rng.standard_normal(n)
    return Dataset(y=y, Z=z, X=x)


class TestPartition:
    def test_deciles_of_distinct_values(self, rng):
        data = _continuous(rng, 100)
        part = make_partition(data, scheme='quantile', K=10)
        assert part.K == 10
        assert part.counts.tolist() == [10] * 10
        assert part.flags == ()

    def test_element_partition(self, sim1_data):
        part = make_partition(sim1_data, scheme='element')
        assert part.K == 4
        assert part.counts.sum() == sim1_data.n
        np.testing.assert_allclose(part.probs.sum(), 1.0)

    def test_small_cell_is_merged(self, rng):
        z = np.concatenate([np.repeat(np.arange(1.0, 9.0), 12), [9.0, 9.0]])
        data = Dataset(y=rng.standard_normal(98), Z=z, X=rng.standard_normal(98))
        part = make_partition(data, scheme='quantile', K=10, min_count=5)
        assert part.K == 8
        assert part.counts.tolist() == [12] * 7 + [14]
        assert 'collapsed_breakpoints' in part.flags
        assert 'cells_merged' in part.flags
        assert part.assign(np.array([9.0, 1.0])).tolist() == [7, 0]

    def test_order_condition(self, rng):
        data = _continuous(rng)
        with pytest.raises(OrderConditionError):
            make_partition(data, scheme='quantile', K=2)

    def test_quantile_requires_scalar_z(self, sim1_data):
        with pytest.raises(ConfigurationError):
            make_partition(sim1_data, scheme='quantile')

    def test_element_cap(self, rng):
        data = _continuous(rng)
        with pytest.raises(TooManyCellsError):
            make_partition(data, scheme='element', max_cells=50)

    def test_user_breakpoints(self, rng):
        data = _continuous(rng)
        part = make_partition(data, scheme='user', breakpoints=[[-1.0, 0.0, 1.0]])
        assert part.K == 4
        expected = np.searchsorted([-1.0, 0.0, 1.0], data.Z[:, 0], side='left')
        np.testing.assert_array_equal(part.labels, expected)

    def test_rebuilt_from_config(self, rng):
        data = _continuous(rng)
        part = make_partition(data, scheme='quantile', K=6)
        rebuilt = partition_from_config(data, part.to_config())
        np.testing.assert_array_equal(rebuilt.labels, part.labels)
        np.testing.assert_allclose(
            fit_theta_disc(data, rebuilt).coef, fit_theta_disc(data, part).coef, rtol=1e-12
        )

    def test_product_quantiles(self, rng):
        Z = rng.standard_normal((300, 2))
        data = Dataset(y=rng.standard_normal(300), Z=Z, X=np.sin(Z[:, 0]) + Z[:, 1] ** 2)
        part = make_partition(data, scheme='product', K=3)
        assert part.K == 9
        assert part.counts.sum() == 300


class TestThetaDisc:
    def test_equals_dummy_instrument_projection(self, rng):
        for _ in range(50):
            data = _continuous(rng)
            part = make_partition(data, scheme='quantile', K=8)
            D = part.dummies()
            W = data.raw_design()
            PW = D @ np.linalg.solve(D.T @ D, D.T @ W)
            expected = np.linalg.solve(PW.T @ W, PW.T @ data.y)
            np.testing.assert_allclose(fit_theta_disc(data, part).coef, expected, rtol=1e-8)

    def test_collinear_cell_means(self, rng):
        z = rng.uniform(0.0, 1.0, 100)
        data = Dataset(y=rng.standard_normal(100), Z=z, X=3.0 - 2.0 * z)
        part = make_partition(data, scheme='quantile', K=5)
        with pytest.raises(IdentificationError):
            fit_theta_disc(data, part)

    def test_homoskedastic_variance(self, rng):
        data = _continuous(rng, 200)
        part = make_partition(data, scheme='quantile', K=10)
        result = fit_theta_disc(data, part, homoskedastic=True)
        resid = data.y - data.raw_design() @ result.coef
        G = (part.W_bar * part.probs[:, None]).T @ part.W_bar
        np.testing.assert_allclose(result.vcov, np.mean(resid ** 2) * np.linalg.inv(G), rtol=1e-8)

    def test_estimator_uses_context_partition(self, sim1_data):
        context = EstimationContext(partition_config=PartitionConfig(scheme='element'))
        result = get_estimator('disc').estimate(sim1_data, context)
        assert result.extras['partition']['K'] == 4
        assert result.names == ('const', 'z1', 'z2', 'x')
