"""
留一交叉验证
为 Nadaraya-Watson 选择带宽、为三次样条选择自由度
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ...core.config import setup_logger
from ...core.errors import ConfigurationError, FirstStageError
from ...models.constants import FirstStageMethods, Tolerances
from ...models.data import Dataset
from .smoothers import SplineSmoother, as_response, scaled_sq_distances

logger = setup_logger(__name__)

# 默认带宽网格：倍数 × σ_Z × n^{-1/5}
DEFAULT_GRID_SIZE = 30
DEFAULT_GRID_RANGE = (0.05, 3.0)
# 样条自由度默认候选
DEFAULT_DF_GRID = tuple(range(4, 21))


@dataclass(frozen=True, eq=False)
class BandwidthSelection:
    """
    交叉验证结果

    grid 的每一行是一个候选（NW 为带宽向量，样条为单元素 df），
    criterion_values 为对应的留一平方误差，chosen 为最小值的下标。
    """

    grid: np.ndarray
    criterion_values: np.ndarray
    chosen: int
    saturated: Tuple[int, ...] = ()

    @property
    def best(self) -> np.ndarray:
        return self.grid[self.chosen]

    def to_dict(self):
        return {
            'grid': self.grid.tolist(),
            'criterion_values': self.criterion_values.tolist(),
            'chosen': self.chosen,
            'saturated_terms': list(self.saturated),
        }


def default_bandwidth_grid(Z: np.ndarray) -> np.ndarray:
    """
    默认带宽网格

    30 个对数等距倍数 c ∈ [0.05, 3]，候选带宽向量为 c·σ_j·n^{-1/5}；
    所有维度共用同一个倍数。σ_j 为 0 时按 1 处理。

    返回:
        30×d_z 数组，按倍数升序
    """
    n = Z.shape[0]
    scale = np.std(Z, axis=0)
    scale = np.where(scale > 0, scale, 1.0) * n ** (-0.2)
    multipliers = np.geomspace(*DEFAULT_GRID_RANGE, DEFAULT_GRID_SIZE)
    return multipliers[:, None] * scale[None, :]


def user_bandwidth_grid(values: Sequence[float], d_z: int) -> np.ndarray:
    """用户给定的绝对带宽（各维共用），升序排列"""
    grid = np.sort(np.asarray(list(values), dtype=float).reshape(-1))
    if grid.size == 0 or np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise ConfigurationError(f"带宽网格必须为非空正数列表: {list(values)}")
    return np.repeat(grid[:, None], d_z, axis=1)


def kernel_loocv(Z: np.ndarray, R: np.ndarray, bandwidth: np.ndarray) -> Tuple[float, int]:
    """
    NW 留一交叉验证，使用平滑矩阵对角元的捷径公式

    e_i = (R_i - R̂_i) / (1 - L_ii)，L_ii = 1 / Σ_j K_ij

    返回:
        (各响应列求和后的平均平方误差, 因自权重饱和被排除的项数)
    """
    R = as_response(R)
    weights = np.exp(-0.5 * scaled_sq_distances(Z, Z, np.asarray(bandwidth, dtype=float)))
    return _shortcut_score(weights, R)


def _shortcut_score(weights: np.ndarray, R: np.ndarray) -> Tuple[float, int]:
    totals = weights.sum(axis=1)
    fitted = (weights @ R) / totals[:, None]
    leverage = 1.0 / totals
    keep = (1.0 - leverage) > Tolerances.LOOCV_SATURATION
    excluded = int(np.count_nonzero(~keep))
    if not np.any(keep):
        return float('inf'), excluded
    errors = (R[keep] - fitted[keep]) / (1.0 - leverage[keep])[:, None]
    return float(np.sum(errors ** 2) / np.count_nonzero(keep)), excluded


def spline_loocv(z: np.ndarray, R: np.ndarray, df: int) -> Tuple[float, int]:
    """样条留一交叉验证（帽子矩阵对角元的精确公式）"""
    R = as_response(R)
    smoother = SplineSmoother(z, R, df)
    leverage = smoother.smoother_diagonal()
    fitted = smoother.fitted()
    keep = (1.0 - leverage) > Tolerances.LOOCV_SATURATION
    excluded = int(np.count_nonzero(~keep))
    if not np.any(keep):
        return float('inf'), excluded
    errors = (R[keep] - fitted[keep]) / (1.0 - leverage[keep])[:, None]
    return float(np.sum(errors ** 2) / np.count_nonzero(keep)), excluded


def _choose(grid: np.ndarray, scores: np.ndarray, excluded: Sequence[int]) -> BandwidthSelection:
    if not np.any(np.isfinite(scores)):
        raise ConfigurationError("交叉验证在所有候选上都无定义")
    # 网格升序且 argmin 返回首个最小值，平局偏向较小的候选
    chosen = int(np.argmin(np.where(np.isfinite(scores), scores, np.inf)))
    saturated = tuple(j for j, count in enumerate(excluded) if count > 0)
    return BandwidthSelection(grid=grid, criterion_values=scores, chosen=chosen, saturated=saturated)


def select_bandwidth(
    Z: np.ndarray,
    R: np.ndarray,
    grid: Optional[np.ndarray] = None,
    n_jobs: int = 1,
) -> BandwidthSelection:
    """
    在网格上最小化 NW 留一平方误差

    参数:
        Z: n×d_z 训练点
        R: n×k 响应
        grid: m×d_z 候选带宽，None 使用默认网格
        n_jobs: 并行计算候选的进程数（结果按网格顺序归约）

    返回:
        交叉验证结果
    """
    grid = default_bandwidth_grid(Z) if grid is None else grid
    R = as_response(R)

    if n_jobs == 1:
        results = [kernel_loocv(Z, R, h) for h in grid]
    else:
        results = Parallel(n_jobs=n_jobs)(delayed(kernel_loocv)(Z, R, h) for h in grid)

    scores = np.array([score for score, _ in results])
    excluded = [count for _, count in results]
    for h, score in zip(grid, scores):
        logger.debug(f"NW 候选带宽 {np.round(h, 6).tolist()}: LOOCV = {score:.6g}")
    if any(excluded):
        logger.warning(f"{sum(1 for c in excluded if c)} 个候选带宽出现自权重饱和，饱和项已排除")
    return _choose(grid, scores, excluded)


def _safe_spline_loocv(z: np.ndarray, R: np.ndarray, df: int) -> Tuple[float, int]:
    # 秩亏的候选不参与选择
    try:
        return spline_loocv(z, R, df)
    except FirstStageError as e:
        logger.debug(f"样条候选 df={df} 不可用: {e}")
        return float('inf'), 0


def select_df(z: np.ndarray, R: np.ndarray, grid: Optional[Sequence[int]] = None) -> BandwidthSelection:
    """
    在候选自由度上最小化样条留一平方误差

    默认候选 {4, ..., 20}，超过 z 不同取值数的候选被剔除
    """
    n_unique = np.unique(z).shape[0]
    candidates = sorted(DEFAULT_DF_GRID if grid is None else grid)
    candidates = [int(df) for df in candidates if 4 <= df <= n_unique]
    if not candidates:
        raise ConfigurationError(f"没有可用的样条自由度候选 (不同取值数 {n_unique})")

    results = [_safe_spline_loocv(z, R, df) for df in candidates]
    scores = np.array([score for score, _ in results])
    excluded = [count for _, count in results]
    for df, score in zip(candidates, scores):
        logger.debug(f"样条候选 df={df}: LOOCV = {score:.6g}")
    return _choose(np.array(candidates)[:, None], scores, excluded)


def loocv_score(
    data: Dataset,
    candidate: Union[float, Sequence[float], int],
    method: str = FirstStageMethods.NADARAYA_WATSON,
    target: str = 'pi',
) -> float:
    """
    单个候选的留一交叉验证得分

    参数:
        data: 样本
        candidate: NW 为带宽（标量或长度 d_z 向量），样条为 df
        method: nw 或 spline
        target: 'pi' 以 X 为响应, 'h' 以 y 为响应

    返回:
        平均留一平方误差（各响应列求和）
    """
    R = data.X if target == 'pi' else data.y
    if method == FirstStageMethods.NADARAYA_WATSON:
        bandwidth = np.broadcast_to(np.asarray(candidate, dtype=float), (data.d_z,))
        if np.any(bandwidth <= 0):
            raise ConfigurationError(f"带宽必须为正: {candidate}")
        score, excluded = kernel_loocv(data.Z, R, bandwidth)
    elif method == FirstStageMethods.CUBIC_SPLINE:
        if data.d_z != 1:
            raise ConfigurationError("三次样条只支持一维 Z, 请改用 nw")
        score, excluded = spline_loocv(data.Z[:, 0], R, int(candidate))
    else:
        raise ConfigurationError(f"方法 {method} 没有交叉验证")

    if excluded:
        logger.warning(f"{excluded} 个观测的自权重饱和 (1 - L_ii ≈ 0)，已从得分中排除")
    return score
