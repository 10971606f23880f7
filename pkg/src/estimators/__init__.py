"""
估计量模块
按标签注册所有估计量
"""

from typing import Dict, Type

from ..core.errors import ConfigurationError
from ..models.constants import EstimatorTags
from .base import BaseEstimator, EstimationContext
from .disc import DiscEstimator
from .linear import (
    InfeasibleEstimator,
    OlsEstimator,
    ThetaHatEstimator,
    ThetaStarEstimator,
    TslsEstimator,
)
from .nonlinear import NonlinearEstimator, QuantileEstimator

ESTIMATORS: Dict[str, Type[BaseEstimator]] = {
    EstimatorTags.THETA: ThetaHatEstimator,
    EstimatorTags.THETA_STAR: ThetaStarEstimator,
    EstimatorTags.DISC: DiscEstimator,
    EstimatorTags.OLS: OlsEstimator,
    EstimatorTags.TSLS: TslsEstimator,
    EstimatorTags.INFEASIBLE: InfeasibleEstimator,
    EstimatorTags.QUANTILE: QuantileEstimator,
    EstimatorTags.NONLINEAR: NonlinearEstimator,
}


def get_estimator(tag: str) -> BaseEstimator:
    """
    按标签创建估计量

    异常:
        ConfigurationError: 未知的标签
    """
    if tag == EstimatorTags.NONLINEAR_STAR:
        return NonlinearEstimator(use_h=True)
    if tag not in ESTIMATORS:
        choices = ', '.join([*ESTIMATORS, EstimatorTags.NONLINEAR_STAR])
        raise ConfigurationError(f"未知的估计量: {tag}，支持: {choices}")
    return ESTIMATORS[tag]()


__all__ = [
    'BaseEstimator',
    'EstimationContext',
    'ESTIMATORS',
    'get_estimator',
]
