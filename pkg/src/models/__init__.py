"""
数据模型定义模块
提供常量与数值容器定义
"""

from .constants import (
    DgpFamilies,
    EstimatorTags,
    ExitCodes,
    FirstStageMethods,
    PartitionSchemes,
    Tolerances,
    Verdicts,
)
from .data import AugmentedDesign, Dataset, EstimateResult, Theta, build_design

__all__ = [
    # 常量类
    'FirstStageMethods',
    'PartitionSchemes',
    'EstimatorTags',
    'Verdicts',
    'DgpFamilies',
    'Tolerances',
    'ExitCodes',
    # 数据容器
    'Dataset',
    'Theta',
    'AugmentedDesign',
    'EstimateResult',
    'build_design',
]
