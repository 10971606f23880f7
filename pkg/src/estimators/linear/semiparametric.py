"""
半参数两步估计量
θ̂ 以 Y 为因变量、θ̂* 以 ĥ(Z) 为因变量，在 Ŵ = (1, Z, π̂(Z)) 上做最小二乘
"""

import numpy as np

from ...core.linalg import check_full_rank, gram, solve_least_squares
from ...inference.variance import build_result, variance_semiparametric
from ...models.constants import EstimatorTags
from ...models.data import AugmentedDesign, Dataset, EstimateResult, Theta, build_design
from ..base import BaseEstimator, EstimationContext
from ..first_stage import FirstStageFit


def _regress_on_design(
    data: Dataset,
    design: AugmentedDesign,
    response: np.ndarray,
    tag: str,
    homoskedastic: bool,
) -> EstimateResult:
    eigenvalues = check_full_rank(gram(design.W), data.labels, what='E_n[ŴŴ\']')
    theta = Theta.from_vector(solve_least_squares(design.W, response), data.d_z, data.d_x)
    parts = variance_semiparametric(data, design, theta, homoskedastic)
    return build_result(
        theta,
        parts.V_hat,
        data.n,
        tag,
        data.labels,
        eigenvalues=eigenvalues,
        flags=design.flags,
        extras={'first_stage': design.source.describe(), 'homoskedastic': homoskedastic},
    )


def fit_theta_hat(data: Dataset, fit: FirstStageFit, homoskedastic: bool = False) -> EstimateResult:
    """
    θ̂ = (E_n[ŴŴ'])⁻¹ E_n[ŴY]

    参数:
        data: 样本
        fit: 第一阶段拟合
        homoskedastic: 使用同方差方差公式

    返回:
        估计结果

    异常:
        IdentificationError: E_n[ŴŴ'] 秩亏，携带特征值谱
    """
    design = build_design(data, fit)
    return _regress_on_design(data, design, data.y, EstimatorTags.THETA, homoskedastic)


def fit_theta_star(data: Dataset, fit: FirstStageFit, homoskedastic: bool = False) -> EstimateResult:
    """
    θ̂* = (E_n[ŴŴ'])⁻¹ E_n[Ŵ ĥ(Z)]

    方差公式与 θ̂ 相同（残差仍为 Y - W̃'θ̂*）
    """
    design = build_design(data, fit)
    response = fit.h_hat(data.Z)
    return _regress_on_design(data, design, response, EstimatorTags.THETA_STAR, homoskedastic)


class ThetaHatEstimator(BaseEstimator):
    """半参数两步估计 θ̂"""

    tag = EstimatorTags.THETA

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        fit = context.first_stage(data)
        return self._log_flags(fit_theta_hat(data, fit, context.homoskedastic))


class ThetaStarEstimator(BaseEstimator):
    """半参数两步估计 θ̂*"""

    tag = EstimatorTags.THETA_STAR

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        fit = context.first_stage(data)
        return self._log_flags(fit_theta_star(data, fit, context.homoskedastic))
