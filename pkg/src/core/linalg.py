"""
线性代数工具
QR 最小二乘求解、Gram 矩阵谱分析与三明治矩阵计算；全部避免显式求逆
"""

from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from ..models.constants import Tolerances
from .errors import IdentificationError


def gram(design: np.ndarray, weights: Optional[np.ndarray] = None) -> np.ndarray:
    """
    计算 (1/n) Σ w_i a_i a_i'

    参数:
        design: n×d 矩阵
        weights: 长度 n 的权重，None 表示全部为 1

    返回:
        d×d 对称矩阵
    """
    n = design.shape[0]
    if weights is None:
        g = design.T @ design / n
    else:
        g = (design * weights[:, None]).T @ design / n
    return 0.5 * (g + g.T)


def spectrum(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    对称矩阵的特征分解，特征值降序排列

    返回:
        (特征值, 特征向量按列排列)
    """
    values, vectors = linalg.eigh(0.5 * (matrix + matrix.T))
    order = np.argsort(values)[::-1]
    return values[order], vectors[:, order]


def condition_number(eigenvalues: np.ndarray) -> float:
    """由降序特征值计算条件数，最小特征值非正时为 inf"""
    largest, smallest = float(eigenvalues[0]), float(eigenvalues[-1])
    if smallest <= 0.0:
        return float('inf')
    return largest / smallest


def check_full_rank(
    matrix: np.ndarray,
    labels: Optional[List[str]] = None,
    what: str = 'Gram 矩阵',
    tolerance: float = Tolerances.SINGULARITY_RELATIVE,
) -> np.ndarray:
    """
    检查对称半正定矩阵是否满秩（相对容差）

    参数:
        matrix: d×d 对称矩阵
        labels: 各维度对应的系数名称
        what: 错误信息中矩阵的名称
        tolerance: 最小特征值相对于最大特征值的下限

    返回:
        降序特征值

    异常:
        IdentificationError: 最小特征值 <= tolerance × 最大特征值
    """
    values, vectors = spectrum(matrix)
    largest = values[0]
    if not np.isfinite(largest) or largest <= 0.0 or values[-1] <= tolerance * largest:
        raise IdentificationError(
            f"{what} 奇异或接近奇异 (最小特征值 {values[-1]:.3e}, 最大特征值 {largest:.3e})",
            eigenvalues=values,
            eigenvector=vectors[:, -1],
            labels=labels,
        )
    return values


def solve_least_squares(design: np.ndarray, response: np.ndarray) -> np.ndarray:
    """
    通过经济型 QR 分解求解最小二乘问题 min ||A x - b||

    参数:
        design: n×d 满列秩矩阵
        response: 长度 n 的向量或 n×k 矩阵

    返回:
        长度 d 的解向量或 d×k 矩阵
    """
    q, r = linalg.qr(design, mode='economic')
    return linalg.solve_triangular(r, q.T @ response)


def solve_symmetric(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """求解对称正定系统 G x = b"""
    return linalg.solve(matrix, rhs, assume_a='sym')


def sandwich(bread: np.ndarray, meat: np.ndarray) -> np.ndarray:
    """
    计算 B^{-1} M B^{-1}，结果对称化

    参数:
        bread: 对称可逆矩阵 B
        meat: 对称矩阵 M

    返回:
        对称矩阵
    """
    left = solve_symmetric(bread, meat)
    v = solve_symmetric(bread, left.T).T
    return 0.5 * (v + v.T)
