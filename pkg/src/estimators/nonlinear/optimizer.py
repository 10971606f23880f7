"""
多起点无导数优化
有界 Nelder-Mead 加逐坐标精修；胜者按 (目标值, θ 的字典序) 选出
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from ...core.config import setup_logger
from ...core.errors import ConfigurationError

logger = setup_logger(__name__)


@dataclass(frozen=True)
class NonlinearConfig:
    """
    优化配置

    box_radius: 未给出搜索区域时，围绕起点的半宽
    initial_step: 初始单纯形的边长
    xatol: 单纯形直径的终止容差
    multimodal_tol: 各起点最优值的相对极差超过该值时标记多峰
    """

    box_radius: float = 10.0
    initial_step: float = 0.5
    xatol: float = 1e-6
    fatol: float = 1e-12
    max_iter: int = 4000
    refine_sweeps: int = 2
    multimodal_tol: float = 1e-6
    n_jobs: int = 1

    def __post_init__(self):
        if self.box_radius <= 0 or self.initial_step <= 0:
            raise ConfigurationError("box_radius 与 initial_step 必须为正")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class StartResult:
    start: np.ndarray
    theta: np.ndarray
    objective: float


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    theta: np.ndarray
    objective: float
    starts: Tuple[StartResult, ...]
    flags: Tuple[str, ...] = ()
    box: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            'objective': self.objective,
            'starts': [
                {'start': s.start.tolist(), 'theta': s.theta.tolist(), 'objective': s.objective}
                for s in self.starts
            ],
            'box': self.box.tolist(),
        }


def default_box(seeds: Sequence[np.ndarray], radius: float) -> np.ndarray:
    """包含全部起点、各向外扩 radius 的搜索区域，d×2"""
    stacked = np.vstack([np.asarray(s, dtype=float) for s in seeds])
    return np.column_stack([stacked.min(axis=0) - radius, stacked.max(axis=0) + radius])


def default_starts(box: np.ndarray, seeds: Sequence[np.ndarray] = ()) -> List[np.ndarray]:
    """
    搜索区域中心与 4 个确定性的内角点（中心与角点的中点），再加上给定的起点

    内角点依次为：全下、全上、下上交替、上下交替
    """
    lo, hi = box[:, 0], box[:, 1]
    center = 0.5 * (lo + hi)
    half = 0.25 * (hi - lo)
    d = box.shape[0]
    alternating = np.where(np.arange(d) % 2 == 0, -1.0, 1.0)
    patterns = [-np.ones(d), np.ones(d), alternating, -alternating]
    starts = [center] + [center + p * half for p in patterns]
    starts.extend(np.clip(np.asarray(s, dtype=float), lo, hi) for s in seeds)
    return starts


def _initial_simplex(x0: np.ndarray, step: float, box: np.ndarray) -> np.ndarray:
    d = x0.shape[0]
    simplex = np.tile(x0, (d + 1, 1))
    for j in range(d):
        up = x0[j] + step
        simplex[j + 1, j] = up if up <= box[j, 1] else x0[j] - step
    return simplex


def _refine(objective: Callable, theta: np.ndarray, value: float, box: np.ndarray, config: NonlinearConfig):
    """逐坐标一维有界搜索，只接受严格改进"""
    theta = theta.copy()
    for _ in range(config.refine_sweeps):
        improved = False
        for j in range(theta.shape[0]):
            lo = max(box[j, 0], theta[j] - config.initial_step)
            hi = min(box[j, 1], theta[j] + config.initial_step)
            if hi <= lo:
                continue

            def along(t, j=j):
                trial = theta.copy()
                trial[j] = t
                return objective(trial)

            res = optimize.minimize_scalar(along, bounds=(lo, hi), method='bounded', options={'xatol': 1e-10})
            if res.fun < value:
                theta[j] = res.x
                value = float(res.fun)
                improved = True
        if not improved:
            break
    return theta, value


def _run_start(objective: Callable, x0: np.ndarray, box: np.ndarray, config: NonlinearConfig) -> StartResult:
    res = optimize.minimize(
        objective,
        x0,
        method='Nelder-Mead',
        bounds=optimize.Bounds(box[:, 0], box[:, 1]),
        options={
            'xatol': config.xatol,
            'fatol': config.fatol,
            'maxiter': config.max_iter,
            'initial_simplex': _initial_simplex(x0, config.initial_step, box),
        },
    )
    theta = np.clip(np.asarray(res.x, dtype=float), box[:, 0], box[:, 1])
    value = float(objective(theta))
    start_value = float(objective(x0))
    if start_value < value:
        theta, value = x0.copy(), start_value
    theta, value = _refine(objective, theta, value, box, config)
    return StartResult(start=x0, theta=theta, objective=value)


def multistart_minimize(
    objective: Callable[[np.ndarray], float],
    box: np.ndarray,
    seeds: Sequence[np.ndarray] = (),
    config: Optional[NonlinearConfig] = None,
) -> OptimizationResult:
    """
    在搜索区域内多起点最小化

    参数:
        objective: 目标函数
        box: d×2 搜索区域
        seeds: 额外起点（会被截断到区域内）
        config: 优化配置

    返回:
        最优结果；flags 可能包含 boundary（最优点贴近边界）与 multimodal（各起点最优值分散）
    """
    config = config or NonlinearConfig()
    box = np.asarray(box, dtype=float)
    starts = default_starts(box, seeds)

    if config.n_jobs == 1:
        results = [_run_start(objective, x0, box, config) for x0 in starts]
    else:
        results = Parallel(n_jobs=config.n_jobs, prefer='threads')(
            delayed(_run_start)(objective, x0, box, config) for x0 in starts
        )

    for r in results:
        logger.debug(
            f"起点 {np.round(r.start, 4).tolist()} -> θ={np.round(r.theta, 6).tolist()}, "
            f"目标值 {r.objective:.8g}"
        )

    best = min(results, key=lambda r: (r.objective, tuple(r.theta.tolist())))
    flags = []

    width = box[:, 1] - box[:, 0]
    if np.any(best.theta - box[:, 0] <= 1e-6 * width) or np.any(box[:, 1] - best.theta <= 1e-6 * width):
        flags.append('boundary')
        logger.warning("最优点位于搜索区域边界，局部识别只在内点成立")

    values = np.array([r.objective for r in results])
    spread = float(values.max() - values.min())
    if spread > config.multimodal_tol * (1.0 + abs(best.objective)):
        flags.append('multimodal')
        logger.warning(f"各起点的最优值不一致 (极差 {spread:.3e})，目标函数可能多峰")

    return OptimizationResult(
        theta=best.theta,
        objective=best.objective,
        starts=tuple(results),
        flags=tuple(flags),
        box=box,
    )
