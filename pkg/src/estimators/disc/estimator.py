"""
离散化估计量 θ̂_disc
以单元格虚拟变量为工具的 2SLS，等价于单元格均值上的加权回归
"""

from typing import Optional

import numpy as np

from ...core.linalg import check_full_rank, gram, solve_least_squares
from ...inference.variance import build_result, variance_disc
from ...models.constants import EstimatorTags, PartitionSchemes
from ...models.data import Dataset, EstimateResult, Theta
from ..base import BaseEstimator, EstimationContext
from .partition import Partition, PartitionConfig, partition_from_config


def fit_theta_disc(data: Dataset, part: Partition, homoskedastic: bool = False) -> EstimateResult:
    """
    θ̂_disc = (Σ_k p̂_k W̄_k W̄_k')⁻¹ Σ_k p̂_k W̄_k μ̂_{y,k}

    参数:
        data: 样本
        part: 在同一样本上构造的划分
        homoskedastic: 使用合并 σ̂² 的同方差方差公式

    返回:
        估计结果，extras 中包含划分描述

    异常:
        IdentificationError: 划分多重共线，携带最小特征值对应的 (1, Z̄, X̄) 线性组合
    """
    weights = part.probs * part.K
    eigenvalues = check_full_rank(
        gram(part.W_bar, weights), data.labels, what='划分 Gram 矩阵 Σ_k p̂_k W̄_k W̄_k\''
    )
    root = np.sqrt(part.probs)
    coef = solve_least_squares(part.W_bar * root[:, None], part.mu_y * root)
    theta = Theta.from_vector(coef, data.d_z, data.d_x)

    parts = variance_disc(data, part, theta, homoskedastic)
    return build_result(
        theta,
        parts.V_hat,
        data.n,
        EstimatorTags.DISC,
        data.labels,
        eigenvalues=eigenvalues,
        flags=part.flags,
        extras={'partition': part.to_spec(), 'homoskedastic': homoskedastic},
    )


def default_partition_config(data: Dataset) -> PartitionConfig:
    """一维 Z 默认十分位，多维默认每维三分位"""
    if data.d_z == 1:
        return PartitionConfig(scheme=PartitionSchemes.QUANTILE_RANGES)
    return PartitionConfig(scheme=PartitionSchemes.PRODUCT_QUANTILES)


class DiscEstimator(BaseEstimator):
    """离散化估计 θ̂_disc"""

    tag = EstimatorTags.DISC

    def __init__(self, config: Optional[PartitionConfig] = None):
        super().__init__()
        self.config = config

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        config = self.config or context.partition_config or default_partition_config(data)
        part = partition_from_config(data, config)
        return self._log_flags(fit_theta_disc(data, part, context.homoskedastic))
