"""
异常模块
定义估计、诊断与命令行共用的异常层级，每个异常都带有退出码和可序列化的负载
"""

from typing import Any, Dict, List, Optional, Sequence

import numpy as np


class IncludedIVError(Exception):
    """所有异常的基类"""

    exit_code = 1

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict[str, Any]:
        """
        转换为机器可读的字典

        返回:
            包含错误类型、信息、退出码和附加细节的字典
        """
        payload = {
            'error': self.__class__.__name__,
            'message': self.message,
            'exit_code': self.exit_code,
        }
        for key, value in self.details.items():
            payload[key] = _jsonable(value)
        return payload


class DataError(IncludedIVError, ValueError):
    """输入数据不合法"""


class NonFiniteDataError(DataError):
    """数据中包含 NaN 或 Inf"""


class DimensionMismatchError(DataError):
    """维度不一致"""

    def __init__(self, dimension: str, expected: Any, actual: Any):
        super().__init__(
            f"维度 {dimension} 不匹配: 期望 {expected}, 实际 {actual}",
            dimension=dimension,
            expected=expected,
            actual=actual,
        )
        self.dimension = dimension


class MissingColumnError(DataError):
    """CSV 中缺少指定的列"""

    def __init__(self, column: str):
        super().__init__(f"缺少列: {column}", column=column)
        self.column = column


class ParseError(DataError):
    """单元格无法解析为数值"""

    def __init__(self, row: int, column: str, value: str):
        super().__init__(
            f"第 {row} 行, 列 {column} 无法解析为数值: {value!r}",
            row=row,
            column=column,
            value=value,
        )
        self.row = row
        self.column = column


class MissingValueError(DataError):
    """存在缺失值（不做插补）"""

    def __init__(self, row: int, column: str):
        super().__init__(f"第 {row} 行, 列 {column} 存在缺失值", row=row, column=column)
        self.row = row
        self.column = column


class ConfigurationError(IncludedIVError, ValueError):
    """参数或配置不合法"""


class IdentificationError(IncludedIVError):
    """
    识别条件在样本中不成立

    eigenvalues 为相关 Gram 矩阵的特征值（降序），eigenvector 为最小特征值
    对应的特征向量，labels 给出其各分量对应的系数名称。
    """

    exit_code = 2

    def __init__(
        self,
        message: str,
        eigenvalues: Optional[Sequence[float]] = None,
        eigenvector: Optional[Sequence[float]] = None,
        labels: Optional[List[str]] = None,
        **details: Any,
    ):
        super().__init__(
            message,
            eigenvalues=eigenvalues,
            eigenvector=eigenvector,
            labels=labels,
            **details,
        )
        self.eigenvalues = None if eigenvalues is None else np.asarray(eigenvalues, dtype=float)
        self.eigenvector = None if eigenvector is None else np.asarray(eigenvector, dtype=float)
        self.labels = labels

    def collinear_combination(self) -> Dict[str, float]:
        """返回近似共线的线性组合（系数名 -> 权重）"""
        if self.eigenvector is None:
            return {}
        labels = self.labels or [f'c{j}' for j in range(len(self.eigenvector))]
        return {name: float(w) for name, w in zip(labels, self.eigenvector)}


class OrderConditionError(IdentificationError):
    """单元格数或支撑点数少于参数维度 d"""


class UnderIdentificationError(IdentificationError):
    """工具变量个数少于内生变量个数"""


class NumericError(IncludedIVError, ArithmeticError):
    """数值计算失败"""

    exit_code = 3


class NegativeVarianceError(NumericError):
    """协方差矩阵对角元显著为负"""


class FirstStageError(NumericError):
    """第一阶段非参数回归失败"""


class UnseenPointError(FirstStageError):
    """在训练中未出现的取值处计算单元格均值"""

    def __init__(self, point: Sequence[float]):
        point = [float(v) for v in np.atleast_1d(point)]
        super().__init__(f"评估点 {point} 不在训练单元格中", point=point)
        self.point = point


class TooManyCellsError(FirstStageError):
    """不同取值的个数超过上限"""

    def __init__(self, distinct: int, cap: int):
        super().__init__(
            f"Z 有 {distinct} 个不同取值, 超过上限 {cap}; 请改用 nw 或 spline 第一阶段",
            distinct=distinct,
            cap=cap,
        )


class KernelUnderflowError(FirstStageError):
    """评估点处全部核权重下溢为 0"""

    def __init__(self, point: Sequence[float], bandwidth: Sequence[float]):
        point = [float(v) for v in np.atleast_1d(point)]
        bandwidth = [float(v) for v in np.atleast_1d(bandwidth)]
        super().__init__(
            f"评估点 {point} 处核权重全部下溢 (带宽 {bandwidth})",
            point=point,
            bandwidth=bandwidth,
        )
        self.point = point
        self.bandwidth = bandwidth


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value
