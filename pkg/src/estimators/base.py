"""
估计量基类
定义所有估计量的公共接口，以及在同一份样本上共享第一阶段拟合的估计上下文
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ..core import setup_logger
from ..models.data import Dataset, EstimateResult
from .first_stage import FirstStageConfig, FirstStageFit, fit_first_stage


@dataclass
class EstimationContext:
    """
    一次估计（或一次模拟重复）内各估计量共享的设置

    first_stage 首次被请求时拟合并缓存，之后所有估计量复用同一个拟合。
    """

    first_stage_config: FirstStageConfig = field(default_factory=FirstStageConfig)
    partition_config: Any = None
    true_pi: Optional[Callable[[np.ndarray], np.ndarray]] = None
    tau: float = 0.5
    nonlinear_config: Any = None
    model_name: str = 'linear'
    excluded: Optional[Sequence[int]] = None
    homoskedastic: bool = False
    _fit: Optional[FirstStageFit] = field(default=None, repr=False)

    def first_stage(self, data: Dataset) -> FirstStageFit:
        """返回（必要时拟合）第一阶段"""
        if self._fit is None:
            self._fit = fit_first_stage(data, self.first_stage_config)
        return self._fit


class BaseEstimator(ABC):
    """估计量基类"""

    tag: str = ''

    def __init__(self):
        self.logger = setup_logger(self.__class__.__name__)
        # 模拟中由调用方汇总标记，逐次结果只记 debug
        self.quiet = False

    @abstractmethod
    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        """
        在样本上计算估计量

        参数:
            data: 样本
            context: 共享设置与第一阶段缓存

        返回:
            估计结果
        """
        pass

    def _log_flags(self, result: EstimateResult) -> EstimateResult:
        log = self.logger.debug if self.quiet else self.logger.warning
        for flag in result.flags:
            log(f"{self.tag}: {flag}")
        return result
