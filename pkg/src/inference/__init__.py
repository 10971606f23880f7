"""
方差估计与置信区间
"""

from .variance import (
    DiscVarianceParts,
    SandwichParts,
    build_result,
    confidence_intervals,
    standard_errors,
    structural_residuals,
    variance_disc,
    variance_semiparametric,
)

__all__ = [
    'SandwichParts',
    'DiscVarianceParts',
    'variance_semiparametric',
    'variance_disc',
    'confidence_intervals',
    'standard_errors',
    'structural_residuals',
    'build_result',
]
