"""
方差估计
半参数估计量的三明治方差、离散化估计量的方差以及 95% 置信区间
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import setup_logger
from ..core.errors import NegativeVarianceError
from ..core.linalg import check_full_rank, condition_number, gram, sandwich
from ..models.constants import Tolerances
from ..models.data import AugmentedDesign, Dataset, EstimateResult, Theta

logger = setup_logger(__name__)


@dataclass(frozen=True, eq=False)
class SandwichParts:
    """Σ̂ = E_n[ŴŴ']，Ω̂ = E_n[ε̂²ŴŴ']，V̂ = Σ̂⁻¹Ω̂Σ̂⁻¹"""

    Sigma_hat: np.ndarray
    Omega_hat: np.ndarray
    V_hat: np.ndarray
    eigenvalues: np.ndarray
    homoskedastic: bool = False


@dataclass(frozen=True, eq=False)
class DiscVarianceParts:
    """
    离散化估计量的方差组成

    sigma2 为各单元格的残差平方均值，gram 为 Σ_k p̂_k W̄_k W̄_k'
    """

    sigma2: np.ndarray
    gram: np.ndarray
    V_hat: np.ndarray
    eigenvalues: np.ndarray
    homoskedastic: bool = False


def structural_residuals(data: Dataset, theta: Theta) -> np.ndarray:
    """
    结构残差 ε̂_i = Y_i - α̂ - Z_i'β̂ - X_i'γ̂

    注意使用观测到的 X_i，而不是 π̂(Z_i)
    """
    return data.y - data.raw_design() @ theta.to_vector()


def variance_semiparametric(
    data: Dataset,
    design: AugmentedDesign,
    theta: Theta,
    homoskedastic: bool = False,
) -> SandwichParts:
    """
    θ̂ / θ̂* 的渐近方差估计

    参数:
        data: 样本
        design: 估计时使用的增广设计
        theta: 点估计
        homoskedastic: True 时 Ω̂ 取 (平均 ε̂²)·Σ̂

    返回:
        三明治各组成部分

    异常:
        IdentificationError: Σ̂ 奇异
    """
    W = design.W
    Sigma = gram(W)
    eigenvalues = check_full_rank(Sigma, data.labels, what='Σ̂ = E_n[ŴŴ\']')

    eps = structural_residuals(data, theta)
    if homoskedastic:
        Omega = float(np.mean(eps ** 2)) * Sigma
    else:
        Omega = gram(W, eps ** 2)
    return SandwichParts(
        Sigma_hat=Sigma,
        Omega_hat=Omega,
        V_hat=sandwich(Sigma, Omega),
        eigenvalues=eigenvalues,
        homoskedastic=homoskedastic,
    )


def variance_disc(
    data: Dataset,
    part: Any,
    theta: Theta,
    homoskedastic: bool = False,
) -> DiscVarianceParts:
    """
    θ̂_disc 的渐近方差估计

    V̂_disc = G⁻¹ (Σ_k p̂_k σ̄̂²_k W̄_k W̄_k') G⁻¹，G = Σ_k p̂_k W̄_k W̄_k'

    参数:
        data: 样本
        part: 估计时使用的划分
        theta: θ̂_disc
        homoskedastic: True 时所有单元格使用合并的 σ̂²

    异常:
        IdentificationError: G 奇异
    """
    probs = part.probs
    W_bar = part.W_bar
    G = gram(W_bar, probs * part.K)
    eigenvalues = check_full_rank(G, data.labels, what='Σ_k p̂_k W̄_k W̄_k\'')

    eps2 = structural_residuals(data, theta) ** 2
    if homoskedastic:
        sigma2 = np.full(part.K, float(np.mean(eps2)))
    else:
        sigma2 = np.bincount(part.labels, weights=eps2, minlength=part.K) / part.counts

    meat = gram(W_bar, probs * sigma2 * part.K)
    return DiscVarianceParts(
        sigma2=sigma2,
        gram=G,
        V_hat=sandwich(G, meat),
        eigenvalues=eigenvalues,
        homoskedastic=homoskedastic,
    )


def standard_errors(V: np.ndarray, n: int) -> Tuple[np.ndarray, Tuple[str, ...]]:
    """
    se_j = sqrt(V_jj / n)

    异常:
        NegativeVarianceError: 对角元低于 -1e-8
    """
    diag = np.diag(V).copy()
    if np.any(diag < -Tolerances.PSD_ABSOLUTE):
        j = int(np.argmin(diag))
        raise NegativeVarianceError(
            f"协方差矩阵第 {j} 个对角元为负: {diag[j]:.3e}", index=j, value=float(diag[j])
        )
    flags: Tuple[str, ...] = ()
    if np.any(diag < 0):
        flags = ('variance_clamped',)
        logger.warning("协方差矩阵存在微小的负对角元，已截断为 0")
        diag = np.maximum(diag, 0.0)
    return np.sqrt(diag / n), flags


def confidence_intervals(theta: Theta, V: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    95% 置信区间 θ̂_j ∓ 1.96·sqrt(V_jj / n)

    返回:
        (下界, 上界)
    """
    se, _ = standard_errors(V, n)
    coef = theta.to_vector()
    return coef - Tolerances.CI_Z * se, coef + Tolerances.CI_Z * se


def build_result(
    theta: Theta,
    V: np.ndarray,
    n: int,
    estimator_tag: str,
    names: Sequence[str],
    eigenvalues: Optional[np.ndarray] = None,
    flags: Sequence[str] = (),
    extras: Optional[Dict[str, Any]] = None,
) -> EstimateResult:
    """
    组装估计结果

    参数:
        theta: 点估计
        V: √n 尺度的渐近协方差
        n: 样本量
        estimator_tag: 估计量标签
        names: 系数名称
        eigenvalues: 求解所用 Gram 矩阵的降序特征值
        flags: 已有的警告标记
        extras: 估计量特有的附加信息
    """
    V = 0.5 * (V + V.T)
    se, clamp_flags = standard_errors(V, n)
    coef = theta.to_vector()
    all_flags: List[str] = list(dict.fromkeys([*flags, *clamp_flags]))
    return EstimateResult(
        theta=theta,
        vcov=V,
        se=se,
        ci_lower=coef - Tolerances.CI_Z * se,
        ci_upper=coef + Tolerances.CI_Z * se,
        estimator_tag=estimator_tag,
        n=n,
        condition_number=condition_number(eigenvalues) if eigenvalues is not None else float('nan'),
        names=tuple(names),
        flags=tuple(all_flags),
        extras=dict(extras or {}),
    )
