"""
两步非线性估计量 θ̂_nl 与 θ̂*_nl
最小化 (1/n) Σ (Y_i - m̂(Z_i, θ))²，θ̂*_nl 用 ĥ(Z_i) 代替 Y_i
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from ...core.errors import IdentificationError
from ...core.linalg import gram, sandwich, spectrum
from ...inference.variance import build_result
from ...models.constants import EstimatorTags, Tolerances
from ...models.data import Dataset, EstimateResult, Theta
from ..base import BaseEstimator, EstimationContext
from ..first_stage import FirstStageConfig, fit_first_stage
from .models import NonlinearModel, builtin_model
from .optimizer import NonlinearConfig, default_box, multistart_minimize
from .projection import ProjectedMoment, least_squares_objective, reference_or_zeros


def _as_theta(vector: np.ndarray, data: Dataset, model: NonlinearModel) -> Theta:
    if model.theta_dim == data.d:
        return Theta.from_vector(vector, data.d_z, data.d_x)
    return Theta(vector[0], vector[1:], np.empty(0))


def check_local_identification(
    gradients: np.ndarray, names: Sequence[str]
) -> Tuple[np.ndarray, np.ndarray]:
    """
    检查 M̂ = E_n[∇θ m̂ ∇θ m̂'] 是否满秩

    返回:
        (M̂, 降序特征值)

    异常:
        IdentificationError: M̂ 奇异，θ₀ 的局部识别条件不成立
    """
    M = gram(gradients)
    values, vectors = spectrum(M)
    if not np.isfinite(values[0]) or values[0] <= 0 or values[-1] <= Tolerances.SINGULARITY_RELATIVE * values[0]:
        raise IdentificationError(
            f"M̂ = E_n[∇m̂ ∇m̂'] 奇异 (最小特征值 {values[-1]:.3e}): "
            f"∇θ m₀(Z, θ₀) 不满秩, θ₀ 的局部识别条件不成立",
            eigenvalues=values,
            eigenvector=vectors[:, -1],
            labels=list(names),
        )
    return M, values


def fit_nonlinear(
    data: Dataset,
    model: NonlinearModel,
    first_stage: Optional[FirstStageConfig] = None,
    config: Optional[NonlinearConfig] = None,
    use_h: bool = False,
) -> EstimateResult:
    """
    两步非线性最小二乘

    参数:
        data: 样本
        model: 回归函数 f(Z, X, θ)
        first_stage: 投影矩所用平滑器的配置
        config: 优化配置
        use_h: True 时计算 θ̂*_nl（因变量为 ĥ(Z)）

    返回:
        估计结果；vcov = M̂⁻¹ E_n[ε̂² ∇m̂ ∇m̂'] M̂⁻¹，ε̂ = Y - f(Z, X, θ̂)

    异常:
        IdentificationError: M̂ 奇异
    """
    first_stage = first_stage or FirstStageConfig()
    config = config or NonlinearConfig()
    names = model.coefficient_names()

    start = reference_or_zeros(model.start, model.theta_dim)
    box = model.theta_box if model.theta_box is not None else default_box([start], config.box_radius)
    center = 0.5 * (box[:, 0] + box[:, 1])

    def pseudo(theta):
        return model.value(data.Z, data.X, theta)

    moment = ProjectedMoment(data, pseudo, first_stage, center)
    target = data.y
    tag = EstimatorTags.NONLINEAR
    if use_h:
        target = fit_first_stage(data, first_stage).h_hat(data.Z)
        tag = EstimatorTags.NONLINEAR_STAR

    result = multistart_minimize(least_squares_objective(moment, target), box, [start], config)
    theta_hat = result.theta

    # 平滑器对响应线性，∇θ m̂ = S ∇θ f
    gradients = moment.smooth(model.gradient(data.Z, data.X, theta_hat))
    M, eigenvalues = check_local_identification(gradients, names)
    eps = data.y - model.value(data.Z, data.X, theta_hat)
    V = sandwich(M, gram(gradients, eps ** 2))

    return build_result(
        _as_theta(theta_hat, data, model),
        V,
        data.n,
        tag,
        names,
        eigenvalues=eigenvalues,
        flags=result.flags,
        extras={
            'model': model.name,
            'optimizer': result.to_dict(),
            'objective_evaluations': moment.evaluations,
        },
    )


class NonlinearEstimator(BaseEstimator):
    """内置模型的两步非线性估计"""

    tag = EstimatorTags.NONLINEAR

    def __init__(self, use_h: bool = False):
        super().__init__()
        self.use_h = use_h
        if use_h:
            self.tag = EstimatorTags.NONLINEAR_STAR

    def estimate(self, data: Dataset, context: EstimationContext) -> EstimateResult:
        model = builtin_model(context.model_name, data)
        return self._log_flags(
            fit_nonlinear(
                data,
                model,
                context.first_stage_config,
                context.nonlinear_config,
                use_h=self.use_h,
            )
        )
