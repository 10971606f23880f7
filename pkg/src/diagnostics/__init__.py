"""
识别诊断模块
"""

from .identification import IdentificationReport, check_identification, nonlinearity_statistics
from .instruments import InstrumentReport, check_instrument_function
from .variance_gap import DgpMoments, VarianceGap, infeasible_variance_gap

__all__ = [
    'IdentificationReport',
    'InstrumentReport',
    'DgpMoments',
    'VarianceGap',
    'check_identification',
    'check_instrument_function',
    'infeasible_variance_gap',
    'nonlinearity_statistics',
]
