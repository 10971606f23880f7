"""
线性估计量
"""

from .comparators import (
    InfeasibleEstimator,
    OlsEstimator,
    TslsEstimator,
    fit_infeasible,
    fit_ols,
    fit_tsls_excluded,
)
from .semiparametric import ThetaHatEstimator, ThetaStarEstimator, fit_theta_hat, fit_theta_star

__all__ = [
    'fit_theta_hat',
    'fit_theta_star',
    'fit_ols',
    'fit_tsls_excluded',
    'fit_infeasible',
    'ThetaHatEstimator',
    'ThetaStarEstimator',
    'OlsEstimator',
    'TslsEstimator',
    'InfeasibleEstimator',
]
