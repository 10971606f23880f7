"""
比较用估计量
OLS、把 Z 当作排除工具的 2SLS，以及使用真实 π₀ 的不可行估计；方差均为 HC0
"""

from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from ...core.errors import ConfigurationError, UnderIdentificationError
from ...core.linalg import check_full_rank, gram, sandwich, solve_least_squares
from ...inference.variance import build_result
from ...models.constants import EstimatorTags, Tolerances
from ...models.data import Dataset, EstimateResult, Theta
from ..base import BaseEstimator, EstimationContext


def _robust_ols(design: np.ndarray, y: np.ndarray, labels: List[str]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """返回 (系数, HC0 协方差, Gram 特征值)"""
    Sigma = gram(design)
    eigenvalues = check_full_rank(Sigma, labels, what='回归元 Gram 矩阵')
    coef = solve_least_squares(design, y)
    resid = y - design @ coef
    return coef, sandwich(Sigma, gram(design, resid ** 2)), eigenvalues


def fit_ols(data: Dataset, include_x: bool = True) -> EstimateResult:
    """
    Y 对 (1, Z, X) 的最小二乘，异方差稳健 (HC0) 方差

    参数:
        data: 样本
        include_x: False 时只对 (1, Z) 回归，γ 为空

    异常:
        IdentificationError: 回归元秩亏
    """
    if include_x:
        design, labels = data.raw_design(), data.labels
    else:
        design = np.column_stack([np.ones(data.n), data.Z])
        labels = ['const', *data.z_names]

    coef, V, eigenvalues = _robust_ols(design, data.y, labels)
    d_x = data.d_x if include_x else 0
    theta = Theta(coef[0], coef[1:1 + data.d_z], coef[1 + data.d_z:1 + data.d_z + d_x])
    return build_result(theta, V, data.n, EstimatorTags.OLS, labels, eigenvalues=eigenvalues)


def _canonical_correlations(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """两组已中心化（已剔除共同回归元）变量间的典型相关系数，降序"""
    q_left, r_left = linalg.qr(left, mode='economic')
    q_right, r_right = linalg.qr(right, mode='economic')
    scale = max(np.abs(np.diag(r_left)).max(), 1e-300)
    if np.abs(np.diag(r_left)).min() <= 1e-12 * scale:
        return np.zeros(min(left.shape[1], right.shape[1]))
    values = linalg.svd(q_left.T @ q_right, compute_uv=False)
    return np.clip(values, 0.0, 1.0)


def _first_stage_strength(
    X: np.ndarray, included: np.ndarray, excluded: np.ndarray
) -> Tuple[float, float]:
    """
    第一阶段强度

    返回:
        (剔除内含回归元后的最小典型相关, 对应的偏 F 统计量)
    """
    n = X.shape[0]
    x_resid = X - included @ solve_least_squares(included, X)
    z_resid = excluded - included @ solve_least_squares(included, excluded)
    rho = float(_canonical_correlations(x_resid, z_resid)[:X.shape[1]].min())
    k_excluded = excluded.shape[1]
    dof = n - included.shape[1] - k_excluded
    r2 = rho ** 2
    f_stat = float('inf') if r2 >= 1.0 else (r2 / k_excluded) / ((1.0 - r2) / max(dof, 1))
    return rho, f_stat


def fit_tsls_excluded(data: Dataset, excluded: Optional[Sequence[int]] = None) -> EstimateResult:
    """
    经典 2SLS：把 Z 的部分列当作排除工具

    参数:
        data: 样本
        excluded: 作为排除工具的 Z 列下标，None 表示全部

    返回:
        回归元为 (1, Z_内含, X) 的估计结果；flags 含 weak_first_stage 表示弱工具

    异常:
        UnderIdentificationError: 排除工具个数少于内生变量个数
        IdentificationError: 工具或投影后的设计秩亏
    """
    excluded_idx = list(range(data.d_z)) if excluded is None else sorted(set(int(j) for j in excluded))
    if any(j < 0 or j >= data.d_z for j in excluded_idx):
        raise ConfigurationError(f"排除工具下标越界: {excluded_idx} (d_z={data.d_z})")
    if len(excluded_idx) < data.d_x:
        raise UnderIdentificationError(
            f"排除工具 {len(excluded_idx)} 个, 少于内生变量 {data.d_x} 个",
            excluded=excluded_idx,
            d_x=data.d_x,
        )
    included_idx = [j for j in range(data.d_z) if j not in excluded_idx]

    exog = np.column_stack([np.ones(data.n), data.Z[:, included_idx]])
    instruments = np.column_stack([exog, data.Z[:, excluded_idx]])
    regressors = np.column_stack([exog, data.X])
    names = ['const', *[data.z_names[j] for j in included_idx], *data.x_names]
    instrument_names = ['const', *[data.z_names[j] for j in included_idx + excluded_idx]]

    check_full_rank(gram(instruments), instrument_names, what='工具变量 Gram 矩阵')
    projected = instruments @ solve_least_squares(instruments, regressors)
    Q = gram(projected)
    eigenvalues = check_full_rank(Q, names, what='投影后的回归元 Gram 矩阵')

    coef = solve_least_squares(projected, data.y)
    resid = data.y - regressors @ coef
    V = sandwich(Q, gram(projected, resid ** 2))

    rho, f_stat = _first_stage_strength(data.X, exog, data.Z[:, excluded_idx])
    flags = ('weak_first_stage',) if rho < Tolerances.WEAK_IV_CANONICAL else ()

    theta = Theta.from_vector(coef, len(included_idx), data.d_x)
    return build_result(
        theta,
        V,
        data.n,
        EstimatorTags.TSLS,
        names,
        eigenvalues=eigenvalues,
        flags=flags,
        extras={
            'excluded': [data.z_names[j] for j in excluded_idx],
            'min_canonical_correlation': rho,
            'first_stage_F': f_stat,
        },
    )


def fit_infeasible(data: Dataset, true_pi: Callable[[np.ndarray], np.ndarray]) -> EstimateResult:
    """
    不可行估计：Y 对 (1, Z, π₀(Z)) 的最小二乘

    残差为 Y - W'θ̂（使用真实 π₀），方差为 HC0 的 V_infeasible
    """
    pi0 = np.asarray(true_pi(data.Z), dtype=float).reshape(data.n, data.d_x)
    design = np.column_stack([np.ones(data.n), data.Z, pi0])
    coef, V, eigenvalues = _robust_ols(design, data.y, data.labels)
    theta = Theta.from_vector(coef, data.d_z, data.d_x)
    return build_result(theta, V, data.n, EstimatorTags.INFEASIBLE, data.labels, eigenvalues=eigenvalues)


class OlsEstimator(BaseEstimator):
    """OLS 比较估计量"""

    tag = EstimatorTags.OLS

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        return fit_ols(data, include_x=True)


class TslsEstimator(BaseEstimator):
    """把 Z 当作排除工具的 2SLS"""

    tag = EstimatorTags.TSLS

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        return self._log_flags(fit_tsls_excluded(data, context.excluded))


class InfeasibleEstimator(BaseEstimator):
    """使用真实 π₀ 的不可行估计（仅模拟）"""

    tag = EstimatorTags.INFEASIBLE

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        if context.true_pi is None:
            raise ConfigurationError("不可行估计需要真实的 π₀ (仅在模拟中可用)")
        return fit_infeasible(data, context.true_pi)
