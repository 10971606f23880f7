"""
非线性与分位数两步估计量
"""

from .estimator import NonlinearEstimator, check_local_identification, fit_nonlinear
from .models import BUILTIN_MODELS, NonlinearModel, builtin_model, exp_index, linear_index
from .optimizer import NonlinearConfig, OptimizationResult, multistart_minimize
from .projection import ProjectedMoment
from .quantile import QuantileEstimator, QuantileMoment, fit_quantile, quantile_objective

__all__ = [
    'NonlinearModel',
    'NonlinearConfig',
    'OptimizationResult',
    'ProjectedMoment',
    'QuantileMoment',
    'BUILTIN_MODELS',
    'builtin_model',
    'linear_index',
    'exp_index',
    'multistart_minimize',
    'check_local_identification',
    'fit_nonlinear',
    'fit_quantile',
    'quantile_objective',
    'NonlinearEstimator',
    'QuantileEstimator',
]
