"""
数据模型
样本容器、参数向量、增广设计矩阵和估计结果；所有对象构造后不可变
"""

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DataError, DimensionMismatchError, NonFiniteDataError

if TYPE_CHECKING:
    from ..estimators.first_stage.fit import FirstStageFit


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def _as_matrix(values: Any, name: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    if matrix.ndim != 2:
        raise DataError(f"{name} 必须是向量或矩阵, 实际维数 {matrix.ndim}")
    return matrix


def _default_names(prefix: str, count: int) -> Tuple[str, ...]:
    if count == 1:
        return (prefix,)
    return tuple(f'{prefix}{j + 1}' for j in range(count))


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    样本 (y, Z, X)

    y 为长度 n 的结果变量，Z 为 n×d_z 外生回归元，X 为 n×d_x 内生回归元。
    构造时拒绝非有限值，并要求 n >= 1 + d_z + d_x。
    """

    y: np.ndarray
    Z: np.ndarray
    X: np.ndarray
    z_names: Tuple[str, ...] = ()
    x_names: Tuple[str, ...] = ()
    y_name: str = 'y'

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        if y.ndim == 2 and y.shape[1] == 1:
            y = y[:, 0]
        if y.ndim != 1:
            raise DataError(f"y 必须是向量, 实际形状 {y.shape}")
        Z = _as_matrix(self.Z, 'Z')
        X = _as_matrix(self.X, 'X')

        n = y.shape[0]
        if Z.shape[0] != n:
            raise DimensionMismatchError('Z 行数', n, Z.shape[0])
        if X.shape[0] != n:
            raise DimensionMismatchError('X 行数', n, X.shape[0])

        for name, values in (('y', y), ('Z', Z), ('X', X)):
            if not np.all(np.isfinite(values)):
                bad = int(np.argwhere(~np.isfinite(np.atleast_2d(values.T).T))[0][0])
                raise NonFiniteDataError(f"{name} 在第 {bad} 行包含非有限值", variable=name, row=bad)

        d = 1 + Z.shape[1] + X.shape[1]
        if n < d:
            raise DataError(f"样本量 n={n} 小于参数维度 d={d}, 估计量无定义", n=n, d=d)

        z_names = tuple(self.z_names) or _default_names('z', Z.shape[1])
        x_names = tuple(self.x_names) or _default_names('x', X.shape[1])
        if len(z_names) != Z.shape[1]:
            raise DimensionMismatchError('Z 列名个数', Z.shape[1], len(z_names))
        if len(x_names) != X.shape[1]:
            raise DimensionMismatchError('X 列名个数', X.shape[1], len(x_names))

        object.__setattr__(self, 'y', _frozen(y))
        object.__setattr__(self, 'Z', _frozen(Z))
        object.__setattr__(self, 'X', _frozen(X))
        object.__setattr__(self, 'z_names', z_names)
        object.__setattr__(self, 'x_names', x_names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def d_z(self) -> int:
        return self.Z.shape[1]

    @property
    def d_x(self) -> int:
        return self.X.shape[1]

    @property
    def d(self) -> int:
        """参数维度 1 + d_z + d_x"""
        return 1 + self.d_z + self.d_x

    @property
    def labels(self) -> List[str]:
        """系数名称，顺序固定为 (常数, Z, X)"""
        return ['const', *self.z_names, *self.x_names]

    def raw_design(self) -> np.ndarray:
        """返回 W̃ = (1, Z, X)"""
        return np.column_stack([np.ones(self.n), self.Z, self.X])

    def take(self, indices: Sequence[int]) -> 'Dataset':
        """按行索引取子样本（也用于行置换）"""
        idx = np.asarray(indices, dtype=int)
        return replace(self, y=self.y[idx], Z=self.Z[idx], X=self.X[idx])

    def with_outcome(self, y: np.ndarray) -> 'Dataset':
        """替换结果变量"""
        return replace(self, y=y)


@dataclass(frozen=True, eq=False)
class Theta:
    """参数 θ = (α, β', γ')'"""

    alpha: float
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'alpha', float(self.alpha))
        object.__setattr__(self, 'beta', _frozen(np.atleast_1d(self.beta).reshape(-1)))
        object.__setattr__(self, 'gamma', _frozen(np.atleast_1d(self.gamma).reshape(-1)))

    @classmethod
    def from_vector(cls, vector: Sequence[float], d_z: int, d_x: int) -> 'Theta':
        """
        从扁平向量构造

        异常:
            DimensionMismatchError: 向量长度不等于 1 + d_z + d_x
        """
        vector = np.asarray(vector, dtype=float).reshape(-1)
        if vector.shape[0] != 1 + d_z + d_x:
            raise DimensionMismatchError('θ 长度', 1 + d_z + d_x, vector.shape[0])
        return cls(vector[0], vector[1:1 + d_z], vector[1 + d_z:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([[self.alpha], self.beta, self.gamma])

    def __len__(self) -> int:
        return 1 + self.beta.shape[0] + self.gamma.shape[0]


@dataclass(frozen=True, eq=False)
class AugmentedDesign:
    """
    增广设计矩阵 Ŵ，第 i 行为 (1, Z_i', π̂(Z_i)')

    flags 记录构造过程中的警告（如外推）。
    """

    W: np.ndarray
    source: 'FirstStageFit'
    d_z: int
    d_x: int
    flags: Tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def Z(self) -> np.ndarray:
        return self.W[:, 1:1 + self.d_z]

    @property
    def pi_hat(self) -> np.ndarray:
        return self.W[:, 1 + self.d_z:]


def build_design(data: Dataset, fit: 'FirstStageFit') -> AugmentedDesign:
    """
    构造增广设计矩阵

    参数:
        data: 样本
        fit: 在相同 d_z, d_x 的样本上训练的第一阶段拟合

    返回:
        列顺序为 (1, Z, π̂(Z)) 的增广设计

    异常:
        DimensionMismatchError: 第一阶段与样本的维度不一致
    """
    if fit.d_z != data.d_z:
        raise DimensionMismatchError('d_z', fit.d_z, data.d_z)
    if fit.d_x != data.d_x:
        raise DimensionMismatchError('d_x', fit.d_x, data.d_x)

    flags = []
    if fit.is_extrapolating(data.Z):
        flags.append('extrapolation')

    pi = np.asarray(fit.pi_hat(data.Z), dtype=float).reshape(data.n, data.d_x)
    W = np.column_stack([np.ones(data.n), data.Z, pi])
    return AugmentedDesign(W=_frozen(W), source=fit, d_z=data.d_z, d_x=data.d_x, flags=tuple(flags))


@dataclass(frozen=True, eq=False)
class EstimateResult:
    """
    估计结果

    vcov 为 √n(θ̂-θ₀) 的渐近协方差估计，se_j = sqrt(vcov_jj / n)，
    置信区间为 θ̂_j ∓ 1.96·se_j。
    """

    theta: Theta
    vcov: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    estimator_tag: str
    n: int
    condition_number: float
    names: Tuple[str, ...]
    flags: Tuple[str, ...] = ()
    extras: Dict[str, Any] = field(default_factory=dict)

    @property
    def coef(self) -> np.ndarray:
        return self.theta.to_vector()

    def coefficient(self, name: str) -> float:
        """按名称取系数"""
        return float(self.coef[self.names.index(name)])

    def to_records(self) -> List[Dict[str, Any]]:
        """系数表的行记录"""
        return [
            {
                'estimator': self.estimator_tag,
                'coef': name,
                'estimate': float(est),
                'se': float(se),
                'ci_lower': float(lo),
                'ci_upper': float(hi),
            }
            for name, est, se, lo, hi in zip(self.names, self.coef, self.se, self.ci_lower, self.ci_upper)
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'estimator': self.estimator_tag,
            'n': self.n,
            'names': list(self.names),
            'coef': self.coef.tolist(),
            'se': self.se.tolist(),
            'ci_lower': self.ci_lower.tolist(),
            'ci_upper': self.ci_upper.tolist(),
            'vcov': self.vcov.tolist(),
            'condition_number': self.condition_number,
            'flags': list(self.flags),
            'extras': self.extras,
        }
