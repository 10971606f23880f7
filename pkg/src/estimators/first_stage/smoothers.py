"""
线性平滑器
单元格均值、乘积高斯核 Nadaraya-Watson 与三次 B 样条最小二乘；
三者对响应变量都是线性的，可在固定超参数下对新的响应重复平滑
"""

from typing import Dict, Optional, Tuple

import numpy as np
from scipy import interpolate, linalg

from ...core.errors import (
    ConfigurationError,
    FirstStageError,
    KernelUnderflowError,
    TooManyCellsError,
    UnseenPointError,
)
from ...models.constants import Tolerances

# 核权重分块计算时每块的最大元素数
_BLOCK_ELEMENTS = 4_000_000


def as_response(values: np.ndarray) -> np.ndarray:
    """把响应整理为 n×k 矩阵"""
    values = np.asarray(values, dtype=float)
    return values[:, None] if values.ndim == 1 else values


class CellMeansSmoother:
    """按 Z 行精确相等分组求均值"""

    def __init__(self, Z: np.ndarray, R: np.ndarray, max_cells: int = Tolerances.MAX_CELLS):
        """
        参数:
            Z: n×d_z 训练点
            R: n×k 响应
            max_cells: 允许的最大不同取值数

        异常:
            TooManyCellsError: 不同取值数超过 max_cells
        """
        keys, inverse, counts = np.unique(Z, axis=0, return_inverse=True, return_counts=True)
        if keys.shape[0] > max_cells:
            raise TooManyCellsError(keys.shape[0], max_cells)

        self.keys = keys
        self.inverse = inverse.reshape(-1)
        self.counts = counts
        self.max_cells = max_cells
        self.means = self._cell_means(as_response(R))
        self._lookup: Dict[Tuple[float, ...], int] = {
            tuple(row): j for j, row in enumerate(keys.tolist())
        }

    def _cell_means(self, R: np.ndarray) -> np.ndarray:
        sums = np.zeros((self.keys.shape[0], R.shape[1]))
        np.add.at(sums, self.inverse, R)
        return sums / self.counts[:, None]

    def cell_index(self, z: np.ndarray) -> np.ndarray:
        """
        查找评估点所属单元格

        异常:
            UnseenPointError: 评估点不在训练单元格中
        """
        index = np.empty(z.shape[0], dtype=int)
        for i, row in enumerate(z.tolist()):
            j = self._lookup.get(tuple(row))
            if j is None:
                raise UnseenPointError(row)
            index[i] = j
        return index

    def predict(self, z: np.ndarray) -> np.ndarray:
        return self.means[self.cell_index(z)]

    def fitted(self) -> np.ndarray:
        return self.means[self.inverse]

    def smooth(self, R: np.ndarray) -> np.ndarray:
        """对新的响应在训练点处求单元格均值"""
        return self._cell_means(as_response(R))[self.inverse]


def scaled_sq_distances(z: np.ndarray, Z: np.ndarray, bandwidth: np.ndarray) -> np.ndarray:
    """Σ_j ((z_j - Z_j) / h_j)²，形状 m×n"""
    dist = np.zeros((z.shape[0], Z.shape[0]))
    for j in range(Z.shape[1]):
        diff = (z[:, j:j + 1] - Z[None, :, j]) / bandwidth[j]
        dist += diff * diff
    return dist


class KernelSmoother:
    """
    乘积高斯核 Nadaraya-Watson 回归

    π̂(z) = Σ_i K_h(z - Z_i) R_i / Σ_i K_h(z - Z_i)，核的归一化常数在比值中约去
    """

    def __init__(self, Z: np.ndarray, R: np.ndarray, bandwidth: np.ndarray):
        bandwidth = np.broadcast_to(np.asarray(bandwidth, dtype=float), (Z.shape[1],)).copy()
        if np.any(bandwidth <= 0) or not np.all(np.isfinite(bandwidth)):
            raise ConfigurationError(f"带宽必须为正: {bandwidth.tolist()}")
        self.Z = np.asarray(Z, dtype=float)
        self.R = as_response(R)
        self.bandwidth = bandwidth
        self._train_weights: Optional[np.ndarray] = None

    def weights(self, z: np.ndarray) -> np.ndarray:
        """评估点到训练点的核权重 (m×n)，未归一化"""
        return np.exp(-0.5 * scaled_sq_distances(z, self.Z, self.bandwidth))

    def _normalized(self, z: np.ndarray) -> np.ndarray:
        w = self.weights(z)
        totals = w.sum(axis=1)
        empty = np.flatnonzero(totals <= 0.0)
        if empty.size:
            raise KernelUnderflowError(z[empty[0]], self.bandwidth)
        return w / totals[:, None]

    def predict(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        block = max(1, _BLOCK_ELEMENTS // max(self.Z.shape[0], 1))
        parts = [self._normalized(z[s:s + block]) @ self.R for s in range(0, z.shape[0], block)]
        return np.vstack(parts) if parts else np.empty((0, self.R.shape[1]))

    def fitted(self) -> np.ndarray:
        return self.smooth(self.R)

    def smooth(self, R: np.ndarray) -> np.ndarray:
        """用训练点处的平滑矩阵对新的响应求拟合值"""
        if self._train_weights is None:
            self._train_weights = self._normalized(self.Z)
        return self._train_weights @ as_response(R)

    def smoother_diagonal(self) -> np.ndarray:
        """平滑矩阵对角元 L_ii = K(0) / Σ_j K_ij"""
        if self._train_weights is None:
            self._train_weights = self._normalized(self.Z)
        return np.diag(self._train_weights).copy()


def spline_knots(z: np.ndarray, df: int) -> np.ndarray:
    """
    三次 B 样条的完整节点向量

    内部节点取唯一值的经验分位数，个数为 df - 4；两端节点重复 4 次

    异常:
        ConfigurationError: df < 4 或 df 超过唯一值个数
    """
    unique = np.unique(z)
    if df < 4:
        raise ConfigurationError(f"三次样条自由度至少为 4, 实际 {df}")
    if df > unique.shape[0]:
        raise ConfigurationError(
            f"样条自由度 df={df} 超过 Z 的不同取值个数 {unique.shape[0]} (n={z.shape[0]})"
        )
    lo, hi = unique[0], unique[-1]
    levels = np.arange(1, df - 3) / (df - 3)
    interior = np.quantile(unique, levels) if levels.size else np.empty(0)
    return np.concatenate([np.repeat(lo, 4), interior, np.repeat(hi, 4)])


class SplineSmoother:
    """一元三次 B 样条最小二乘拟合"""

    DEGREE = 3

    def __init__(self, z: np.ndarray, R: np.ndarray, df: int):
        z = np.asarray(z, dtype=float).reshape(-1)
        self.z = z
        self.df = int(df)
        self.knots = spline_knots(z, self.df)
        basis = interpolate.BSpline.design_matrix(z, self.knots, self.DEGREE).toarray()
        q, r = linalg.qr(basis, mode='economic')
        diag = np.abs(np.diag(r))
        if diag.min() <= 1e-12 * diag.max():
            raise FirstStageError(f"样条基矩阵秩亏 (df={self.df})", df=self.df)
        self._q = q
        self._r = r
        self.R = as_response(R)
        self.coef = linalg.solve_triangular(r, q.T @ self.R)
        self._spline = interpolate.BSpline(self.knots, self.coef, self.DEGREE, extrapolate=True)

    def predict(self, z: np.ndarray) -> np.ndarray:
        values = self._spline(np.asarray(z, dtype=float).reshape(-1))
        return values.reshape(-1, self.R.shape[1])

    def fitted(self) -> np.ndarray:
        return self.smooth(self.R)

    def smooth(self, R: np.ndarray) -> np.ndarray:
        """帽子矩阵 QQ' 作用于新的响应"""
        return self._q @ (self._q.T @ as_response(R))

    def smoother_diagonal(self) -> np.ndarray:
        return np.sum(self._q * self._q, axis=1)

