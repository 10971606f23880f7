"""
非线性模型定义
f(Z, X, θ) 及其对 θ 的梯度；内置 linear 与 exp-index 两种形式
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from ...core.errors import ConfigurationError, NumericError
from ...models.data import Dataset

ModelFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class NonlinearModel:
    """
    已知到参数 θ 的回归函数

    f(Z, X, θ) 接受 n×d_z、n×d_x 矩阵和长度 d 的 θ，返回长度 n 的向量；
    grad 返回 n×d 矩阵，缺省时用前向差分，步长 1e-6·(1+|θ_j|)。
    theta_box 为 d×2 的搜索区域，None 表示围绕起点 ±10。
    """

    f: ModelFunction
    theta_dim: int
    grad: Optional[ModelFunction] = None
    theta_box: Optional[np.ndarray] = None
    start: Optional[np.ndarray] = None
    names: Tuple[str, ...] = ()
    name: str = 'custom'

    def value(self, Z: np.ndarray, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
        values = np.asarray(self.f(Z, X, np.asarray(theta, dtype=float)), dtype=float).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise NumericError(f"模型 {self.name} 在 θ={np.round(theta, 6).tolist()} 处取非有限值")
        return values

    def gradient(self, Z: np.ndarray, X: np.ndarray, theta: np.ndarray) -> np.ndarray:
        """∇θ f，n×d"""
        theta = np.asarray(theta, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(Z, X, theta), dtype=float).reshape(-1, self.theta_dim)

        base = self.value(Z, X, theta)
        columns = []
        for j in range(self.theta_dim):
            step = 1e-6 * (1.0 + abs(theta[j]))
            shifted = theta.copy()
            shifted[j] += step
            columns.append((self.value(Z, X, shifted) - base) / step)
        return np.column_stack(columns)

    def coefficient_names(self) -> Tuple[str, ...]:
        return self.names or tuple(f'theta{j + 1}' for j in range(self.theta_dim))


def linear_index(d_z: int, d_x: int, names: Tuple[str, ...] = ()) -> NonlinearModel:
    """f = α + Z'β + X'γ"""

    def f(Z, X, theta):
        return theta[0] + Z @ theta[1:1 + d_z] + X @ theta[1 + d_z:]

    def grad(Z, X, theta):
        return np.column_stack([np.ones(Z.shape[0]), Z, X])

    return NonlinearModel(f=f, grad=grad, theta_dim=1 + d_z + d_x, names=names, name='linear')


def exp_index(d_z: int, d_x: int, include_z: bool = True, names: Tuple[str, ...] = ()) -> NonlinearModel:
    """f = exp(α + Z'β + X'γ)；include_z=False 时 f = exp(θ₁ + X'θ₂)"""
    k = d_z if include_z else 0

    def index(Z, X, theta):
        z_part = Z @ theta[1:1 + k] if k else 0.0
        return theta[0] + z_part + X @ theta[1 + k:]

    def f(Z, X, theta):
        return np.exp(index(Z, X, theta))

    def grad(Z, X, theta):
        parts = [np.ones(Z.shape[0])] + ([Z] if k else []) + [X]
        return np.column_stack(parts) * f(Z, X, theta)[:, None]

    return NonlinearModel(f=f, grad=grad, theta_dim=1 + k + d_x, names=names, name='exp-index')


BUILTIN_MODELS = ('linear', 'exp-index')


def builtin_model(name: str, data: Dataset) -> NonlinearModel:
    """
    按名称构造内置模型，系数名沿用样本列名

    异常:
        ConfigurationError: 未知的模型名
    """
    if name == 'linear':
        return linear_index(data.d_z, data.d_x, tuple(data.labels))
    if name == 'exp-index':
        return exp_index(data.d_z, data.d_x, True, tuple(data.labels))
    raise ConfigurationError(f"未知的内置模型: {name}，支持: {', '.join(BUILTIN_MODELS)}")
