"""
CSV 读写
按表头把列映射为 y / Z / X；所有单元格先按字符串读入，再逐个解析为浮点数
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.config import setup_logger
from ..core.errors import (
    ConfigurationError,
    DataError,
    MissingColumnError,
    MissingValueError,
    ParseError,
)
from ..models.data import Dataset

logger = setup_logger(__name__)

# 视为缺失的取值（小写比较）
MISSING_TOKENS = frozenset({'', 'na', 'n/a', 'nan', 'null', 'none', '.'})


@dataclass(frozen=True)
class ColumnRoles:
    """列角色：结果变量、外生回归元、内生回归元"""

    y: str
    z: Tuple[str, ...]
    x: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, 'z', tuple(self.z))
        object.__setattr__(self, 'x', tuple(self.x))
        if not self.y:
            raise ConfigurationError("必须指定结果变量列")
        if not self.z:
            raise ConfigurationError("至少需要一个外生回归元列 (--z)")
        if not self.x:
            raise ConfigurationError("至少需要一个内生回归元列 (--x)")
        columns = self.columns
        duplicated = sorted({c for c in columns if columns.count(c) > 1})
        if duplicated:
            raise ConfigurationError(f"列角色必须互不相交, 重复: {', '.join(duplicated)}")

    @property
    def columns(self) -> List[str]:
        return [self.y, *self.z, *self.x]


def _parse_column(values: Sequence[str], column: str) -> np.ndarray:
    parsed = np.empty(len(values))
    for i, raw in enumerate(values):
        text = raw.strip()
        # 表头占第 1 行
        line = i + 2
        if text.lower() in MISSING_TOKENS:
            raise MissingValueError(line, column)
        try:
            parsed[i] = float(text)
        except ValueError:
            raise ParseError(line, column, raw) from None
    return parsed


def ingest_csv(path: str, roles: ColumnRoles) -> Dataset:
    """
    读取带表头的 UTF-8 CSV

    参数:
        path: 文件路径
        roles: 列角色

    返回:
        保持行顺序的样本

    异常:
        DataError: 文件无法读取
        MissingColumnError: 表头中没有某个角色列
        ParseError: 单元格无法解析为数值（行号按文件行计，表头为第 1 行）
        MissingValueError: 角色列存在缺失值
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding='utf-8')
    except (OSError, UnicodeDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DataError(f"无法读取 CSV 文件 {path}: {e}", path=str(path)) from e

    header = [str(c).strip() for c in frame.columns]
    frame.columns = header
    for column in roles.columns:
        if column not in header:
            raise MissingColumnError(column)

    parsed = {column: _parse_column(frame[column].tolist(), column) for column in roles.columns}
    data = Dataset(
        y=parsed[roles.y],
        Z=np.column_stack([parsed[c] for c in roles.z]),
        X=np.column_stack([parsed[c] for c in roles.x]),
        z_names=roles.z,
        x_names=roles.x,
        y_name=roles.y,
    )
    logger.info(f"读取 {path}: n={data.n}, d_z={data.d_z}, d_x={data.d_x}")
    return data


def write_csv(data: Dataset, path: str) -> None:
    """
    把样本写为 CSV

    17 位有效数字保证有限浮点数读回后逐位相同
    """
    columns = [data.y_name, *data.z_names, *data.x_names]
    frame = pd.DataFrame(np.column_stack([data.y, data.Z, data.X]), columns=columns)
    frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
