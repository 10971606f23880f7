"""
模拟数据生成过程
三个设计：二元 X 与两个二元 Z；二元 X 与正态 Z；连续 X 与均匀 Z。
(ε, u) 为单位方差、相关系数 ρ 的二元正态，与 Z 独立
"""

from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Tuple

import numpy as np
from scipy import stats

from ..core.errors import ConfigurationError
from ..models.constants import DgpFamilies
from ..models.data import Dataset, Theta

# 随机流编号
ERROR_STREAM = 0
COVARIATE_STREAM = 1

MIN_SAMPLE = 50
# sim2 中 Z 的标准差
SIM2_Z_SCALE = 2.0


@dataclass(frozen=True)
class DgpSpec:
    """
    模拟设定

    beta0 的长度为 1 时广播到所有 Z 分量；seed 为基础种子，
    第 r 次重复使用 seed + r
    """

    family: str
    n: int
    rho: float = 0.0
    beta0: Tuple[float, ...] = (1.0,)
    seed: int = 0
    alpha0: float = 1.0
    gamma0: float = 1.0

    def __post_init__(self):
        if self.family not in DgpFamilies.CHOICES:
            raise ConfigurationError(
                f"未知的 DGP: {self.family}，支持: {', '.join(DgpFamilies.CHOICES)}"
            )
        if not -1.0 <= self.rho <= 1.0:
            raise ConfigurationError(f"相关系数 ρ 必须在 [-1, 1] 内: {self.rho}")
        if self.n < MIN_SAMPLE:
            raise ConfigurationError(f"样本量 n 至少为 {MIN_SAMPLE}: {self.n}")
        beta = tuple(float(b) for b in np.atleast_1d(self.beta0))
        if len(beta) not in (1, self.d_z):
            raise ConfigurationError(f"beta0 长度应为 1 或 {self.d_z}: {beta}")
        object.__setattr__(self, 'beta0', beta)

    @property
    def d_z(self) -> int:
        return 2 if self.family == DgpFamilies.SIM1 else 1

    @property
    def beta(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.beta0, dtype=float), (self.d_z,)).copy()

    @property
    def theta0(self) -> Theta:
        return Theta(self.alpha0, self.beta, [self.gamma0])

    @property
    def z_names(self) -> Tuple[str, ...]:
        return ('z1', 'z2') if self.family == DgpFamilies.SIM1 else ('z',)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class SimulatedSample:
    """一次重复的样本与真值"""

    data: Dataset
    theta0: Theta
    pi0: Callable[[np.ndarray], np.ndarray]
    h0: Callable[[np.ndarray], np.ndarray]
    replication: int

    @property
    def truth(self) -> Dict[str, float]:
        """系数名 -> 真值"""
        return dict(zip(self.data.labels, self.theta0.to_vector().tolist()))


def replication_rng(seed: int, replication: int, stream: int) -> np.random.Generator:
    """基于计数器的随机数发生器，键为 (seed + replication, stream)"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed + replication, stream])))


def correlated_errors(rng: np.random.Generator, n: int, rho: float) -> Tuple[np.ndarray, np.ndarray]:
    """Cholesky 构造：先抽 ε，再令 u = ρ ε + sqrt(1-ρ²) e"""
    eps = rng.standard_normal(n)
    e = rng.standard_normal(n)
    return eps, rho * eps + np.sqrt(1.0 - rho ** 2) * e


def sim1_index(Z: np.ndarray) -> np.ndarray:
    """2 Z₁Z₂ + 2(1-Z₁)(1-Z₂) - 1"""
    z1, z2 = Z[:, 0], Z[:, 1]
    return 2.0 * z1 * z2 + 2.0 * (1.0 - z1) * (1.0 - z2) - 1.0


def true_pi(family: str) -> Callable[[np.ndarray], np.ndarray]:
    """各设计的真实 π₀(z) = E[X | Z = z]"""
    if family == DgpFamilies.SIM1:
        return lambda Z: stats.norm.cdf(sim1_index(np.asarray(Z, dtype=float).reshape(-1, 2)))
    if family == DgpFamilies.SIM2:
        return lambda Z: stats.norm.cdf(2.0 * np.asarray(Z, dtype=float).reshape(-1))
    return lambda Z: np.cos(np.asarray(Z, dtype=float).reshape(-1))


def _draw_covariates(spec: DgpSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.family == DgpFamilies.SIM1:
        return rng.integers(0, 2, size=(spec.n, 2)).astype(float)
    if spec.family == DgpFamilies.SIM2:
        # Z ~ N(0, 2²)
        return SIM2_Z_SCALE * rng.standard_normal((spec.n, 1))
    return rng.uniform(-np.pi, np.pi, size=(spec.n, 1))


def _endogenous(spec: DgpSpec, Z: np.ndarray, u: np.ndarray) -> np.ndarray:
    if spec.family == DgpFamilies.SIM1:
        return (sim1_index(Z) >= u).astype(float)
    if spec.family == DgpFamilies.SIM2:
        return (2.0 * Z[:, 0] >= u).astype(float)
    z = Z[:, 0]
    return np.cos(z) + np.sqrt(0.5 * np.abs(z) + 0.5) * u


def generate(spec: DgpSpec, replication: int = 0) -> SimulatedSample:
    """
    生成一次重复的样本

    参数:
        spec: 模拟设定
        replication: 重复编号

    返回:
        样本、真实参数以及解析的 π₀ 与 h₀
    """
    eps, u = correlated_errors(replication_rng(spec.seed, replication, ERROR_STREAM), spec.n, spec.rho)
    Z = _draw_covariates(spec, replication_rng(spec.seed, replication, COVARIATE_STREAM))
    X = _endogenous(spec, Z, u)
    beta = spec.beta
    y = spec.alpha0 + Z @ beta + spec.gamma0 * X + eps

    pi0 = true_pi(spec.family)

    def h0(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, spec.d_z)
        return spec.alpha0 + points @ beta + spec.gamma0 * pi0(points)

    data = Dataset(y=y, Z=Z, X=X, z_names=spec.z_names, x_names=('x',))
    return SimulatedSample(data=data, theta0=spec.theta0, pi0=pi0, h0=h0, replication=replication)


def sim1_support() -> Tuple[np.ndarray, np.ndarray]:
    """第一个设计的支撑点 (4×2) 与等概率 1/4"""
    points = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    return points, np.full(4, 0.25)
