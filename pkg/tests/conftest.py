"""
测试公共夹具
"""

import numpy as np
import pytest
from scipy import stats

from src.models.data import Dataset
from src.simulation import DgpSpec, generate


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sim1_data():
    """两个二元 Z、二元 X，n=400"""
    return generate(DgpSpec('sim1', 400, rho=0.5, seed=3)).data


@pytest.fixture
def sim2_data():
    """连续 Z、二元 X，n=200"""
    return generate(DgpSpec('sim2', 200, rho=0.5, seed=5)).data


@pytest.fixture
def ordinal_data(rng):
    """
    Z 取 {0, ..., 4}，π(z) = Φ(z - 2)，X 与 ε 独立，n=500
    """
    n = 500
    z = np.repeat(np.arange(5.0), n // 5)
    x = (rng.uniform(size=n) < stats.norm.cdf(z - 2.0)).astype(float)
    y = 1.0 + 0.5 * z + 2.0 * x + rng.standard_normal(n)
    return Dataset(y=y, Z=z, X=x)


def linear_pi_data(n_per_value: int = 20, seed: int = 1) -> Dataset:
    """X = 2 + 3Z 恰好为 Z 的仿射函数"""
    local = np.random.default_rng(seed)
    z = np.repeat(np.arange(5.0), n_per_value)
    x = 2.0 + 3.0 * z
    y = 1.0 + z + x + local.standard_normal(z.shape[0])
    return Dataset(y=y, Z=z, X=x)
