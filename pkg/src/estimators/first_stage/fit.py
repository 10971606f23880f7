"""
第一阶段拟合
对 π₀(z) = E[X|Z=z] 与 h₀(z) = E[Y|Z=z] 做非参数估计
"""

from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np

from ...core.config import setup_logger
from ...core.errors import ConfigurationError
from ...models.constants import FirstStageMethods, Tolerances
from ...models.data import Dataset
from .selection import (
    BandwidthSelection,
    select_bandwidth,
    select_df,
    user_bandwidth_grid,
)
from .smoothers import CellMeansSmoother, KernelSmoother, SplineSmoother

logger = setup_logger(__name__)

Smoother = Union[CellMeansSmoother, KernelSmoother, SplineSmoother]

# NW 的最小样本量
MIN_NW_SAMPLE = 10


@dataclass(frozen=True)
class FirstStageConfig:
    """
    第一阶段配置

    bandwidth_grid 为 None 时使用默认网格；df 为 None 时交叉验证选择
    """

    method: str = FirstStageMethods.NADARAYA_WATSON
    bandwidth_grid: Optional[Tuple[float, ...]] = None
    df: Optional[int] = None
    max_cells: int = Tolerances.MAX_CELLS
    n_jobs: int = 1

    def __post_init__(self):
        if self.method not in FirstStageMethods.CHOICES:
            raise ConfigurationError(
                f"未知的第一阶段方法: {self.method}，支持: {', '.join(FirstStageMethods.CHOICES)}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _as_points(z: Any, d_z: int) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim == 0:
        z = z.reshape(1, 1)
    elif z.ndim == 1:
        z = z.reshape(-1, d_z) if d_z > 1 else z[:, None]
    if z.shape[1] != d_z:
        raise ConfigurationError(f"评估点维度 {z.shape[1]} 与 d_z={d_z} 不一致")
    return z


class FirstStageFit:
    """
    拟合好的条件均值函数 π̂ 与 ĥ

    构造后只读；pi_model / h_model 为底层线性平滑器，
    已知函数（KNOWN）时为 None。
    """

    def __init__(
        self,
        method: str,
        d_z: int,
        d_x: int,
        pi_model: Optional[Smoother] = None,
        h_model: Optional[Smoother] = None,
        training_support: Optional[np.ndarray] = None,
        selection: Optional[BandwidthSelection] = None,
        h_selection: Optional[BandwidthSelection] = None,
        pi_function: Optional[Callable] = None,
        h_function: Optional[Callable] = None,
    ):
        self.method = method
        self.d_z = d_z
        self.d_x = d_x
        self.pi_model = pi_model
        self.h_model = h_model
        self.training_support = training_support
        self.selection = selection
        self.h_selection = h_selection
        self._pi_function = pi_function
        self._h_function = h_function

    @classmethod
    def from_functions(
        cls,
        pi: Callable[[np.ndarray], np.ndarray],
        h: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        d_z: int = 1,
        d_x: int = 1,
    ) -> 'FirstStageFit':
        """
        用已知的条件均值函数构造（模拟与不可行估计使用）

        参数:
            pi: 把 m×d_z 点映射为长度 m 向量或 m×d_x 矩阵的函数
            h: 同上，映射为长度 m 向量；None 表示不提供 ĥ
        """
        return cls(FirstStageMethods.KNOWN, d_z, d_x, pi_function=pi, h_function=h)

    @property
    def bandwidth(self) -> Optional[np.ndarray]:
        if isinstance(self.pi_model, KernelSmoother):
            return self.pi_model.bandwidth
        return None

    @property
    def h_bandwidth(self) -> Optional[np.ndarray]:
        if isinstance(self.h_model, KernelSmoother):
            return self.h_model.bandwidth
        return None

    @property
    def df(self) -> Optional[int]:
        if isinstance(self.pi_model, SplineSmoother):
            return self.pi_model.df
        return None

    @property
    def knots(self) -> Optional[np.ndarray]:
        if isinstance(self.pi_model, SplineSmoother):
            return self.pi_model.knots
        return None

    def pi_hat(self, z: Any) -> np.ndarray:
        """在 z 处计算 π̂，返回 m×d_x"""
        points = _as_points(z, self.d_z)
        if self._pi_function is not None:
            values = np.asarray(self._pi_function(points), dtype=float)
        else:
            values = self.pi_model.predict(points)
        return values.reshape(points.shape[0], self.d_x)

    def h_hat(self, z: Any) -> np.ndarray:
        """
        在 z 处计算 ĥ，返回长度 m 向量

        异常:
            ConfigurationError: 拟合中不包含 ĥ
        """
        points = _as_points(z, self.d_z)
        if self._h_function is not None:
            values = np.asarray(self._h_function(points), dtype=float)
        elif self.h_model is not None:
            values = self.h_model.predict(points)
        else:
            raise ConfigurationError("该第一阶段拟合不包含 ĥ")
        return values.reshape(points.shape[0])

    def is_extrapolating(self, z: Any) -> bool:
        """评估点是否超出训练支撑集（仅 NW 与样条）"""
        if self.training_support is None or self.method == FirstStageMethods.CELL_MEANS:
            return False
        points = _as_points(z, self.d_z)
        lo, hi = self.training_support
        return bool(np.any(points < lo) or np.any(points > hi))

    def describe(self) -> Dict[str, Any]:
        """第一阶段元信息，用于输出"""
        info: Dict[str, Any] = {'method': self.method}
        if self.bandwidth is not None:
            info['bandwidth'] = self.bandwidth.tolist()
        if self.h_bandwidth is not None:
            info['h_bandwidth'] = self.h_bandwidth.tolist()
        if self.df is not None:
            info['df'] = self.df
            if isinstance(self.h_model, SplineSmoother):
                info['h_df'] = self.h_model.df
        if self.selection is not None:
            info['cv'] = self.selection.to_dict()
        return info


def _support(Z: np.ndarray) -> np.ndarray:
    return np.vstack([Z.min(axis=0), Z.max(axis=0)])


def fit_cell_means(data: Dataset, max_cells: int = Tolerances.MAX_CELLS) -> FirstStageFit:
    """
    单元格均值第一阶段

    参数:
        data: 样本，Z 取有限个不同值
        max_cells: 不同取值数上限

    返回:
        π̂(z) 为 Z_i = z 的观测中 X 的样本均值，ĥ 同理
    """
    pi_model = CellMeansSmoother(data.Z, data.X, max_cells)
    h_model = CellMeansSmoother(data.Z, data.y, max_cells)
    logger.info(f"单元格均值第一阶段: {pi_model.keys.shape[0]} 个单元格")
    return FirstStageFit(
        FirstStageMethods.CELL_MEANS,
        data.d_z,
        data.d_x,
        pi_model=pi_model,
        h_model=h_model,
        training_support=_support(data.Z),
    )


def fit_nadaraya_watson(
    data: Dataset,
    grid: Optional[Tuple[float, ...]] = None,
    n_jobs: int = 1,
) -> FirstStageFit:
    """
    乘积高斯核 NW 第一阶段，带宽由留一最小二乘交叉验证选择

    参数:
        data: 样本 (n >= 10)
        grid: 绝对带宽候选（各维共用），None 使用默认网格
        n_jobs: 交叉验证并行数

    返回:
        π̂ 与 ĥ 分别独立选带宽的拟合
    """
    if data.n < MIN_NW_SAMPLE:
        raise ConfigurationError(f"NW 第一阶段要求 n >= {MIN_NW_SAMPLE}, 实际 n={data.n}")

    candidates = None if grid is None else user_bandwidth_grid(grid, data.d_z)
    pi_selection = select_bandwidth(data.Z, data.X, candidates, n_jobs=n_jobs)
    h_selection = select_bandwidth(data.Z, data.y, candidates, n_jobs=n_jobs)
    _warn_edge(pi_selection, 'π̂')
    _warn_edge(h_selection, 'ĥ')

    logger.info(
        f"NW 第一阶段: π̂ 带宽 {np.round(pi_selection.best, 4).tolist()}, "
        f"ĥ 带宽 {np.round(h_selection.best, 4).tolist()}"
    )
    return FirstStageFit(
        FirstStageMethods.NADARAYA_WATSON,
        data.d_z,
        data.d_x,
        pi_model=KernelSmoother(data.Z, data.X, pi_selection.best),
        h_model=KernelSmoother(data.Z, data.y, h_selection.best),
        training_support=_support(data.Z),
        selection=pi_selection,
        h_selection=h_selection,
    )


def fit_cubic_spline(data: Dataset, df: Optional[int] = None) -> FirstStageFit:
    """
    三次 B 样条第一阶段

    参数:
        data: 样本，要求 d_z = 1
        df: 自由度，None 时在 {4, ..., 20} 上交叉验证

    返回:
        π̂ 与 ĥ 的样条拟合（df 分别选择）
    """
    if data.d_z != 1:
        raise ConfigurationError(f"三次样条只支持一维 Z (d_z={data.d_z}), 请改用 nw")

    z = data.Z[:, 0]
    pi_selection = h_selection = None
    if df is None:
        pi_selection = select_df(z, data.X)
        h_selection = select_df(z, data.y)
        pi_df = int(pi_selection.best[0])
        h_df = int(h_selection.best[0])
    else:
        if df > data.n:
            raise ConfigurationError(f"样条自由度 df={df} 超过样本量 n={data.n}")
        pi_df = h_df = int(df)

    logger.info(f"三次样条第一阶段: π̂ df={pi_df}, ĥ df={h_df}")
    return FirstStageFit(
        FirstStageMethods.CUBIC_SPLINE,
        data.d_z,
        data.d_x,
        pi_model=SplineSmoother(z, data.X, pi_df),
        h_model=SplineSmoother(z, data.y, h_df),
        training_support=_support(data.Z),
        selection=pi_selection,
        h_selection=h_selection,
    )


def fit_first_stage(data: Dataset, config: Optional[FirstStageConfig] = None) -> FirstStageFit:
    """按配置分派到具体的第一阶段方法"""
    config = config or FirstStageConfig()
    if config.method == FirstStageMethods.CELL_MEANS:
        return fit_cell_means(data, config.max_cells)
    if config.method == FirstStageMethods.NADARAYA_WATSON:
        return fit_nadaraya_watson(data, config.bandwidth_grid, config.n_jobs)
    return fit_cubic_spline(data, config.df)


def _warn_edge(selection: BandwidthSelection, target: str) -> None:
    last = selection.grid.shape[0] - 1
    if selection.grid.shape[0] > 1 and selection.chosen in (0, last):
        logger.warning(f"{target} 的交叉验证最优带宽位于网格边界 (下标 {selection.chosen})")
