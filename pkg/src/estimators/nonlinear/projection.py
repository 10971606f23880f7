"""
投影矩 m̂(z, θ)
把伪响应 f(Z_i, X_i, θ) 对 Z 做非参数回归；平滑器超参数在参考 θ 处选定后冻结
"""

import threading
from collections import OrderedDict
from typing import Callable, Optional

import numpy as np

from ...core.config import setup_logger
from ...models.constants import FirstStageMethods
from ...models.data import Dataset
from ..first_stage.fit import FirstStageConfig
from ..first_stage.selection import select_bandwidth, select_df, user_bandwidth_grid
from ..first_stage.smoothers import CellMeansSmoother, KernelSmoother, SplineSmoother

logger = setup_logger(__name__)

# 缓存的 θ 个数上限
CACHE_SIZE = 4096


def frozen_smoother(data: Dataset, config: FirstStageConfig, reference: np.ndarray):
    """
    在参考伪响应上选定超参数并返回平滑器

    参数:
        data: 样本
        config: 第一阶段配置
        reference: 参考 θ 处的伪响应

    返回:
        超参数固定的线性平滑器
    """
    if config.method == FirstStageMethods.CELL_MEANS:
        return CellMeansSmoother(data.Z, reference, config.max_cells)

    reference = np.asarray(reference, dtype=float)
    if np.ptp(reference) <= 0.0:
        # 常数伪响应的交叉验证得分处处为 0，改用 X 选超参数
        logger.info("参考 θ 处伪响应为常数，按 X 的条件均值选择平滑参数")
        reference = data.X

    if config.method == FirstStageMethods.NADARAYA_WATSON:
        grid = None if config.bandwidth_grid is None else user_bandwidth_grid(config.bandwidth_grid, data.d_z)
        selection = select_bandwidth(data.Z, reference, grid, n_jobs=config.n_jobs)
        logger.info(f"投影矩带宽固定为 {np.round(selection.best, 4).tolist()}")
        return KernelSmoother(data.Z, reference, selection.best)

    z = data.Z[:, 0]
    df = config.df
    if df is None:
        df = int(select_df(z, reference).best[0])
    logger.info(f"投影矩样条自由度固定为 {df}")
    return SplineSmoother(z, reference, df)


class ProjectedMoment:
    """
    m̂(·, θ)：伪响应在 Z 上的平滑

    训练点处的拟合值按 θ 缓存；缓存读写受锁保护，可被多线程共享。
    """

    def __init__(
        self,
        data: Dataset,
        pseudo_response: Callable[[np.ndarray], np.ndarray],
        config: FirstStageConfig,
        reference_theta: np.ndarray,
        smoother=None,
    ):
        self.data = data
        self.pseudo_response = pseudo_response
        self.config = config
        self.reference_theta = np.asarray(reference_theta, dtype=float)
        self.smoother = smoother or frozen_smoother(
            data, config, pseudo_response(self.reference_theta)
        )
        self._cache: 'OrderedDict[bytes, np.ndarray]' = OrderedDict()
        self._lock = threading.Lock()
        self.evaluations = 0

    def fitted(self, theta: np.ndarray) -> np.ndarray:
        """训练点处的 m̂(Z_i, θ)，长度 n"""
        theta = np.ascontiguousarray(theta, dtype=float)
        key = theta.tobytes()
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self._cache.move_to_end(key)
                return cached

        values = self.smoother.smooth(self.pseudo_response(theta))[:, 0]
        values.setflags(write=False)
        with self._lock:
            self.evaluations += 1
            self._cache[key] = values
            if len(self._cache) > CACHE_SIZE:
                self._cache.popitem(last=False)
        return values

    def smooth(self, response: np.ndarray) -> np.ndarray:
        """用冻结的平滑器平滑任意响应（可为多列）"""
        return self.smoother.smooth(response)


def least_squares_objective(moment: ProjectedMoment, target: np.ndarray) -> Callable[[np.ndarray], float]:
    """θ ↦ (1/n) Σ (target_i - m̂(Z_i, θ))²"""

    def objective(theta: np.ndarray) -> float:
        resid = target - moment.fitted(theta)
        return float(np.mean(resid * resid))

    return objective


def reference_or_zeros(theta: Optional[np.ndarray], dim: int) -> np.ndarray:
    return np.zeros(dim) if theta is None else np.asarray(theta, dtype=float).reshape(dim)
