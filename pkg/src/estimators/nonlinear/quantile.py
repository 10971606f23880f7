"""
两步分位数估计量 θ̂_q
m̂(z, θ) 为 1{Y ≤ α + Z'β + X'γ} 在 Z 上的平滑，θ̂_q 最小化 (1/n) Σ (m̂(Z_i, θ) - τ)²
"""

from typing import List, Optional

import numpy as np
from scipy import linalg
from statsmodels.regression.quantile_regression import QuantReg

from ...core.config import setup_logger
from ...core.errors import ConfigurationError, IdentificationError, IncludedIVError
from ...core.linalg import gram, solve_symmetric, spectrum
from ...diagnostics.identification import nonlinearity_statistics
from ...inference.variance import build_result, structural_residuals
from ...models.constants import EstimatorTags, FirstStageMethods, Tolerances
from ...models.data import Dataset, EstimateResult, Theta
from ..base import BaseEstimator, EstimationContext
from ..first_stage import FirstStageConfig, fit_first_stage
from ..first_stage.smoothers import CellMeansSmoother, scaled_sq_distances
from ..linear.semiparametric import fit_theta_hat
from .optimizer import NonlinearConfig, default_box, multistart_minimize
from .projection import ProjectedMoment, least_squares_objective

logger = setup_logger(__name__)

# 分位数目标函数分段为常数，初始单纯形取较小的边长
QUANTILE_STEP = 0.25


def silverman_bandwidth(values: np.ndarray) -> np.ndarray:
    """1.06·σ·n^{-1/5}，逐列；σ 为 0 时按 1 处理"""
    values = values[:, None] if values.ndim == 1 else values
    sigma = values.std(axis=0)
    return 1.06 * np.where(sigma > 0, sigma, 1.0) * values.shape[0] ** (-0.2)


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 1.0:
        raise ConfigurationError(f"分位数 τ 必须在 (0, 1) 内: {tau}")


class QuantileMoment:
    """分位数问题的投影矩与目标函数"""

    def __init__(self, data: Dataset, tau: float, first_stage: FirstStageConfig, reference: np.ndarray):
        _check_tau(tau)
        self.data = data
        self.tau = tau
        self._design = data.raw_design()
        self.moment = ProjectedMoment(data, self.indicator, first_stage, reference)
        self.objective = least_squares_objective(self.moment, np.full(data.n, tau))

    def indicator(self, theta: np.ndarray) -> np.ndarray:
        """1{Y_i ≤ W̃_i'θ}"""
        return (self.data.y <= self._design @ theta).astype(float)


def quantile_objective(
    data: Dataset,
    tau: float,
    theta: np.ndarray,
    first_stage: Optional[FirstStageConfig] = None,
) -> float:
    """在单个 θ 处计算分位数目标函数（平滑器超参数在该 θ 处选定）"""
    theta = np.asarray(theta, dtype=float)
    problem = QuantileMoment(data, tau, first_stage or FirstStageConfig(), theta)
    return problem.objective(theta)


def quantile_seeds(data: Dataset, tau: float, first_stage: FirstStageConfig) -> List[np.ndarray]:
    """
    多起点的种子：忽略内生性的 τ 分位数回归解与线性 θ̂

    失败的种子被跳过；都失败时返回零向量
    """
    seeds: List[np.ndarray] = []
    try:
        params = QuantReg(data.y, data.raw_design()).fit(q=tau).params
        params = np.asarray(params, dtype=float)
        if np.all(np.isfinite(params)):
            seeds.append(params)
    except Exception as e:
        logger.debug(f"分位数回归种子失败: {e}")
    try:
        seeds.append(fit_theta_hat(data, fit_first_stage(data, first_stage)).coef)
    except IncludedIVError as e:
        logger.debug(f"线性 θ̂ 种子失败: {e.message}")
    if not seeds:
        seeds.append(np.zeros(data.d))
    return seeds


def _z_kernel(data: Dataset, first_stage: FirstStageConfig) -> np.ndarray:
    """Z 方向的 n×n 核权重；单元格均值配置下为同单元格指示"""
    if first_stage.method == FirstStageMethods.CELL_MEANS:
        cells = CellMeansSmoother(data.Z, np.zeros(data.n), first_stage.max_cells).inverse
        return (cells[:, None] == cells[None, :]).astype(float)
    return np.exp(-0.5 * scaled_sq_distances(data.Z, data.Z, silverman_bandwidth(data.Z)))


def density_factors(data: Dataset, theta: Theta, first_stage: FirstStageConfig):
    """
    f̂_{ε|Z}(0|Z_i)、π̃̂(Z_i) 及 π̃̂ 的抽样方差

    f̂ 为高斯核条件密度（残差与 Z 方向均用 Silverman 带宽）；π̃̂ 为以
    exp(-ε̂²/2λ²) 为残差窗口权重的 NW 估计，方差按加权均值
    Σ_j a_ij²(X_j - π̃̂_i)² / (Σ_j a_ij)² 计算

    返回:
        (长度 n 的密度, n×d_x 的 π̃̂, n×d_x 的方差)
    """
    eps = structural_residuals(data, theta)
    lam = float(silverman_bandwidth(eps)[0])
    Kz = _z_kernel(data, first_stage)
    window = np.exp(-0.5 * (eps / lam) ** 2)

    totals = Kz.sum(axis=1)
    density = (Kz @ (window / (lam * np.sqrt(2.0 * np.pi)))) / totals

    weighted = Kz * window[None, :]
    mass = weighted.sum(axis=1)
    safe = np.where(mass > 0, mass, 1.0)
    pi_tilde = (weighted @ data.X) / safe[:, None]

    # Σ_j a_ij²(X_j - π̃_i)² 按平方展开
    squared = weighted ** 2
    second = squared @ data.X ** 2 - 2.0 * pi_tilde * (squared @ data.X)
    second += pi_tilde ** 2 * squared.sum(axis=1)[:, None]
    variance = np.maximum(second, 0.0) / (safe ** 2)[:, None]
    return density, pi_tilde, variance


def lack_of_fit_ratio(Z: np.ndarray, pi_tilde: np.ndarray, variance: np.ndarray) -> np.ndarray:
    """
    每个内生分量上 π̃̂ 对 (1, Z) 回归残差的均方与 π̃̂ 平均抽样方差之比

    π̃ 为仿射时比值约为 1 以下；方差为 0 时残差为 0 记 0，否则记 inf
    """
    base = np.column_stack([np.ones(Z.shape[0]), Z])
    ratios = np.empty(pi_tilde.shape[1])
    for j in range(pi_tilde.shape[1]):
        coef = linalg.lstsq(base, pi_tilde[:, j])[0]
        resid = pi_tilde[:, j] - base @ coef
        departure = float(np.mean(resid ** 2))
        noise = float(np.mean(variance[:, j]))
        if noise > 0:
            ratios[j] = departure / noise
        else:
            ratios[j] = 0.0 if departure <= 1e-24 else np.inf
    return ratios


def check_tilde_nonlinearity(data: Dataset, pi_tilde: np.ndarray, variance: np.ndarray) -> None:
    """
    π̃̂ 在 Z 上须为非线性，否则 (1, Z, π̃(Z)) 共线

    π̃̂ 是估计量，从不恰好共线，因此同时检查 R²（工作精度下的仿射）
    与偏离仿射的程度是否超出抽样噪声

    异常:
        IdentificationError: 任一分量 R² > 0.999 或偏离/噪声比 ≤ 3
    """
    r2 = nonlinearity_statistics(data.Z, pi_tilde)
    ratios = lack_of_fit_ratio(data.Z, pi_tilde, variance)
    linear = (r2 > Tolerances.NONLINEARITY_R2) | (ratios <= Tolerances.LACK_OF_FIT_RATIO)
    if np.any(linear):
        names = [data.x_names[j] for j in np.flatnonzero(linear)]
        raise IdentificationError(
            f"π̃̂ 在 Z 上与仿射函数无显著差异 ({', '.join(names)}): "
            f"(1, Z, π̃(Z)) are not multicollinear 的条件不成立",
            labels=data.labels,
            nonlinearity_stat=r2.tolist(),
            lack_of_fit_ratio=ratios.tolist(),
        )
    logger.debug(f"π̃̂ 非线性检查通过: R² {np.round(r2, 4).tolist()}, 偏离/噪声比 {np.round(ratios, 2).tolist()}")


def fit_quantile(
    data: Dataset,
    tau: float,
    first_stage: Optional[FirstStageConfig] = None,
    config: Optional[NonlinearConfig] = None,
) -> EstimateResult:
    """
    两步分位数估计

    参数:
        data: 样本
        tau: 分位数 (0, 1)
        first_stage: 平滑器配置
        config: 优化配置，缺省时初始单纯形边长 0.25

    返回:
        估计结果；vcov = τ(1-τ)(E_n[ŜŜ'])⁻¹，Ŝ_i = f̂_{ε|Z}(0|Z_i)(1, Z_i, π̃̂(Z_i))

    异常:
        ConfigurationError: τ 不在 (0, 1)
        IdentificationError: 种子处 π̃̂ 与 Z 的仿射函数无显著差异，或 E_n[ŜŜ'] 奇异
    """
    _check_tau(tau)
    first_stage = first_stage or FirstStageConfig()
    config = config or NonlinearConfig(initial_step=QUANTILE_STEP)

    seeds = quantile_seeds(data, tau, first_stage)
    seed_theta = Theta.from_vector(seeds[0], data.d_z, data.d_x)
    _, seed_pi_tilde, seed_variance = density_factors(data, seed_theta, first_stage)
    check_tilde_nonlinearity(data, seed_pi_tilde, seed_variance)

    problem = QuantileMoment(data, tau, first_stage, seeds[0])
    box = default_box(seeds, config.box_radius)
    result = multistart_minimize(problem.objective, box, seeds, config)
    theta = Theta.from_vector(result.theta, data.d_z, data.d_x)

    flags = list(result.flags)
    density, pi_tilde, _ = density_factors(data, theta, first_stage)
    if np.any(density < Tolerances.DENSITY_FLOOR):
        flags.append('density_floor')
        logger.warning(f"{int(np.sum(density < Tolerances.DENSITY_FLOOR))} 个观测的条件密度 f̂(0|Z) 低于下限")

    S = density[:, None] * np.column_stack([np.ones(data.n), data.Z, pi_tilde])
    SS = gram(S)
    values, vectors = spectrum(SS)
    if not np.isfinite(values[0]) or values[0] <= 0 or values[-1] <= Tolerances.SINGULARITY_RELATIVE * values[0]:
        raise IdentificationError(
            f"E_n[ŜŜ'] 奇异 (最小特征值 {values[-1]:.3e}): (1, Z, π̃(Z)) are not multicollinear 的条件不成立",
            eigenvalues=values,
            eigenvector=vectors[:, -1],
            labels=data.labels,
        )
    V = tau * (1.0 - tau) * solve_symmetric(SS, np.eye(data.d))

    return build_result(
        theta,
        V,
        data.n,
        EstimatorTags.QUANTILE,
        data.labels,
        eigenvalues=values,
        flags=flags,
        extras={
            'tau': tau,
            'objective': result.objective,
            'optimizer': result.to_dict(),
            'min_density': float(density.min()),
        },
    )


class QuantileEstimator(BaseEstimator):
    """两步分位数估计"""

    tag = EstimatorTags.QUANTILE

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        return self._log_flags(
            fit_quantile(data, context.tau, context.first_stage_config, context.nonlinear_config)
        )
