"""
蒙特卡洛汇总
按估计量 × 系数计算 Bias / SD / RMSE / CP 以及基于中位数的稳健汇总
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

SUMMARY_COLUMNS = [
    'n',
    'estimator',
    'coef',
    'bias',
    'sd',
    'rmse',
    'cp',
    'median_bias',
    'median_abs_error',
    'replications',
    'failures',
]


@dataclass(frozen=True)
class CoefficientSummary:
    estimator: str
    coef: str
    bias: float
    sd: float
    rmse: float
    cp: float
    median_bias: float
    median_abs_error: float
    replications: int


@dataclass(frozen=True, eq=False)
class McSummary:
    """
    模拟汇总

    failures 为各估计量失败的重复次数（不计入该估计量的汇总）；
    unavailable 为全部重复都失败的估计量
    """

    n: int
    B: int
    rows: Tuple[CoefficientSummary, ...]
    failures: Dict[str, int] = field(default_factory=dict)
    unavailable: Tuple[str, ...] = ()
    flag_counts: Dict[str, Dict[str, int]] = field(default_factory=dict)

    def row(self, estimator: str, coef: str) -> CoefficientSummary:
        for r in self.rows:
            if r.estimator == estimator and r.coef == coef:
                return r
        raise KeyError(f'{estimator}/{coef}')

    def to_records(self) -> List[Dict[str, Any]]:
        return [
            {
                'n': self.n,
                'estimator': r.estimator,
                'coef': r.coef,
                'bias': r.bias,
                'sd': r.sd,
                'rmse': r.rmse,
                'cp': r.cp,
                'median_bias': r.median_bias,
                'median_abs_error': r.median_abs_error,
                'replications': r.replications,
                'failures': self.failures.get(r.estimator, 0),
            }
            for r in self.rows
        ]


def summarize_draws(
    estimates: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    truth: np.ndarray,
) -> Dict[str, np.ndarray]:
    """
    对 B×d 的估计值计算各项汇总

    sd 使用 1/B 分母，从而 rmse² = bias² + sd² 严格成立
    """
    errors = estimates - truth[None, :]
    bias = errors.mean(axis=0)
    sd = estimates.std(axis=0)
    rmse = np.sqrt(np.mean(errors ** 2, axis=0))
    covered = (lower <= truth[None, :]) & (truth[None, :] <= upper)
    return {
        'bias': bias,
        'sd': sd,
        'rmse': rmse,
        'cp': covered.mean(axis=0),
        'median_bias': np.median(errors, axis=0),
        'median_abs_error': np.median(np.abs(errors), axis=0),
    }


def summarize(
    n: int,
    B: int,
    estimator_tags: Sequence[str],
    draws: Dict[str, List[Tuple[Tuple[str, ...], np.ndarray, np.ndarray, np.ndarray]]],
    truth: Dict[str, float],
    failures: Dict[str, int],
    flag_counts: Optional[Dict[str, Dict[str, int]]] = None,
) -> McSummary:
    """
    汇总各估计量的重复结果

    参数:
        n: 样本量
        B: 重复次数
        estimator_tags: 估计量顺序
        draws: 估计量 -> [(系数名, 估计值, 下界, 上界)]，按重复编号排列
        truth: 系数名 -> 真值
        failures: 估计量 -> 失败次数
        flag_counts: 估计量 -> {标记: 次数}
    """
    rows: List[CoefficientSummary] = []
    unavailable: List[str] = []
    for tag in estimator_tags:
        entries = draws.get(tag, [])
        if not entries:
            unavailable.append(tag)
            continue
        names = entries[0][0]
        estimates = np.vstack([e[1] for e in entries])
        lower = np.vstack([e[2] for e in entries])
        upper = np.vstack([e[3] for e in entries])
        true_values = np.array([truth.get(name, np.nan) for name in names])
        stats = summarize_draws(estimates, lower, upper, true_values)
        for j, name in enumerate(names):
            rows.append(
                CoefficientSummary(
                    estimator=tag,
                    coef=name,
                    bias=float(stats['bias'][j]),
                    sd=float(stats['sd'][j]),
                    rmse=float(stats['rmse'][j]),
                    cp=float(stats['cp'][j]),
                    median_bias=float(stats['median_bias'][j]),
                    median_abs_error=float(stats['median_abs_error'][j]),
                    replications=len(entries),
                )
            )
    return McSummary(
        n=n,
        B=B,
        rows=tuple(rows),
        failures={tag: int(failures.get(tag, 0)) for tag in estimator_tags},
        unavailable=tuple(unavailable),
        flag_counts=flag_counts or {},
    )
