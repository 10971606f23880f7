"""
第一阶段非参数回归
"""

from .fit import (
    FirstStageConfig,
    FirstStageFit,
    fit_cell_means,
    fit_cubic_spline,
    fit_first_stage,
    fit_nadaraya_watson,
)
from .selection import BandwidthSelection, loocv_score

__all__ = [
    'FirstStageConfig',
    'FirstStageFit',
    'BandwidthSelection',
    'fit_cell_means',
    'fit_nadaraya_watson',
    'fit_cubic_spline',
    'fit_first_stage',
    'loocv_score',
]
