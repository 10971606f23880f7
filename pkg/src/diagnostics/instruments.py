"""
工具函数秩检查
对一元 Z、一元 X，检查 (1, Z, g(Z)) 作为工具时矩阵 Ĥ_g 的秩
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict

import numpy as np
from scipy import linalg

from ..core.errors import ConfigurationError, NonFiniteDataError
from ..models.data import Dataset


@dataclass(frozen=True, eq=False)
class InstrumentReport:
    """Ĥ_g 及其奇异值"""

    H: np.ndarray
    singular_values: np.ndarray
    relative_min: float
    determinant: float

    @property
    def min_singular_value(self) -> float:
        return float(self.singular_values[-1])

    def to_dict(self) -> Dict[str, Any]:
        return {
            'H': self.H.tolist(),
            'singular_values': self.singular_values.tolist(),
            'min_singular_value': self.min_singular_value,
            'relative_min': self.relative_min,
            'determinant': self.determinant,
        }


def check_instrument_function(data: Dataset, g: Callable[[np.ndarray], np.ndarray]) -> InstrumentReport:
    """
    Ĥ_g = E_n[(1, Z, g(Z))' (1, Z, X)]

    即 [[1, EZ, EX], [EZ, EZ², EXZ], [Eg, EZg, EXg]]

    参数:
        data: 一元 Z、一元 X 的样本
        g: 工具函数

    返回:
        秩报告

    异常:
        ConfigurationError: Z 或 X 不是一元
        NonFiniteDataError: g 取非有限值
    """
    if data.d_z != 1 or data.d_x != 1:
        raise ConfigurationError(f"工具函数检查只支持一元 Z 与一元 X (d_z={data.d_z}, d_x={data.d_x})")

    z = data.Z[:, 0]
    values = np.asarray(g(data.Z), dtype=float).reshape(-1)
    if values.shape[0] != data.n:
        raise ConfigurationError(f"g 返回 {values.shape[0]} 个值, 期望 {data.n}")
    if not np.all(np.isfinite(values)):
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise NonFiniteDataError(f"g(Z) 在第 {bad} 行为非有限值", variable='g', row=bad)

    instruments = np.column_stack([np.ones(data.n), z, values])
    regressors = np.column_stack([np.ones(data.n), z, data.X[:, 0]])
    H = instruments.T @ regressors / data.n
    singular = linalg.svd(H, compute_uv=False)
    relative = float(singular[-1] / singular[0]) if singular[0] > 0 else 0.0
    return InstrumentReport(
        H=H,
        singular_values=singular,
        relative_min=relative,
        determinant=float(linalg.det(H)),
    )
