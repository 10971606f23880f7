"""
不可行估计的方差差异
Ω_inf - Ω₀ = E[(2 Cov(ε,u|Z)'γ₀ + γ₀' Var(u|Z) γ₀) W W']
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from ..core.errors import DimensionMismatchError
from ..core.linalg import spectrum


@dataclass(frozen=True, eq=False)
class DgpMoments:
    """
    离散支撑上的总体条件矩

    points: m×d，每行为支撑点处的 W = (1, z, π₀(z))
    probs: 长度 m 的概率
    cov_eu: m×d_x，Cov(ε, u | Z = z_k)
    var_u: m×d_x×d_x，Var(u | Z = z_k)
    gamma: 长度 d_x
    """

    points: np.ndarray
    probs: np.ndarray
    cov_eu: np.ndarray
    var_u: np.ndarray
    gamma: np.ndarray

    @classmethod
    def homogeneous(cls, points, probs, cov_eu, var_u, gamma) -> 'DgpMoments':
        """条件矩不随 z 变化时的便捷构造，标量会被广播"""
        points = np.asarray(points, dtype=float)
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        m, k = points.shape[0], gamma.shape[0]
        cov = np.broadcast_to(np.asarray(cov_eu, dtype=float), (k,))
        var = np.broadcast_to(np.asarray(var_u, dtype=float), (k, k)) if np.ndim(var_u) else np.eye(k) * var_u
        return cls(
            points=points,
            probs=np.asarray(probs, dtype=float),
            cov_eu=np.tile(cov, (m, 1)),
            var_u=np.tile(var, (m, 1, 1)),
            gamma=gamma,
        )


@dataclass(frozen=True, eq=False)
class VarianceGap:
    gap: np.ndarray
    eigenvalues: np.ndarray
    sign: str

    def to_dict(self) -> Dict[str, Any]:
        return {'gap': self.gap.tolist(), 'eigenvalues': self.eigenvalues.tolist(), 'sign': self.sign}


def _classify(eigenvalues: np.ndarray) -> str:
    tol = 1e-12 * max(1.0, float(np.abs(eigenvalues).max()))
    if np.all(np.abs(eigenvalues) <= tol):
        return 'zero'
    if np.all(eigenvalues > tol):
        return 'positive_definite'
    if np.all(eigenvalues < -tol):
        return 'negative_definite'
    if np.all(eigenvalues >= -tol):
        return 'positive_semidefinite'
    if np.all(eigenvalues <= tol):
        return 'negative_semidefinite'
    return 'indefinite'


def infeasible_variance_gap(moments: DgpMoments) -> VarianceGap:
    """
    计算 Ω_inf - Ω₀ 及其特征值符号

    异常:
        DimensionMismatchError: 各条件矩的维度不一致
    """
    m, d = moments.points.shape
    k = moments.gamma.shape[0]
    if moments.probs.shape != (m,):
        raise DimensionMismatchError('probs', (m,), moments.probs.shape)
    if moments.cov_eu.shape != (m, k):
        raise DimensionMismatchError('cov_eu', (m, k), moments.cov_eu.shape)
    if moments.var_u.shape != (m, k, k):
        raise DimensionMismatchError('var_u', (m, k, k), moments.var_u.shape)
    if d < 1 + k:
        raise DimensionMismatchError('W 列数', f'>= {1 + k}', d)

    gamma = moments.gamma
    weights = 2.0 * moments.cov_eu @ gamma + np.einsum('i,kij,j->k', gamma, moments.var_u, gamma)
    W = moments.points
    gap = (W * (moments.probs * weights)[:, None]).T @ W
    gap = 0.5 * (gap + gap.T)
    eigenvalues, _ = spectrum(gap)
    return VarianceGap(gap=gap, eigenvalues=eigenvalues, sign=_classify(eigenvalues))
