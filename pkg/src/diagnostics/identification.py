"""
识别诊断
检查 (1, Z, π̂(Z)) 的多重共线性、π̂ 的非线性、划分的秩以及阶条件；诊断只报告，不抛出识别异常
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from ..core.config import setup_logger
from ..core.linalg import condition_number, gram, spectrum
from ..models.constants import Tolerances, Verdicts
from ..models.data import AugmentedDesign

logger = setup_logger(__name__)

NONLINEARITY_NOTE = (
    "nonlinearity_stat 为 π̂ 对 (1, Z) 回归的 R²，是启发式替代指标而非正式检验；"
    f"超过 {Tolerances.NONLINEARITY_R2} 视为 π̂ 在工作精度下接近线性"
)


@dataclass(frozen=True, eq=False)
class IdentificationReport:
    """识别诊断报告"""

    gram_eigenvalues: np.ndarray
    condition_number: float
    nonlinearity_stat: np.ndarray
    component_verdicts: Tuple[str, ...]
    order_condition: Dict[str, Any]
    verdict: str
    partition_rank_ok: Optional[bool] = None
    partition_eigenvalues: Optional[np.ndarray] = None
    labels: Tuple[str, ...] = ()
    notes: Tuple[str, ...] = (NONLINEARITY_NOTE,)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'component_verdicts': list(self.component_verdicts),
            'gram_eigenvalues': self.gram_eigenvalues.tolist(),
            'condition_number': self.condition_number,
            'nonlinearity_stat': self.nonlinearity_stat.tolist(),
            'order_condition': self.order_condition,
            'partition_rank_ok': self.partition_rank_ok,
            'partition_eigenvalues': (
                None if self.partition_eigenvalues is None else self.partition_eigenvalues.tolist()
            ),
            'labels': list(self.labels),
            'notes': list(self.notes),
        }


def nonlinearity_statistics(Z: np.ndarray, pi_hat: np.ndarray) -> np.ndarray:
    """
    每个内生分量上 π̂ 对 (1, Z) 回归的 R²

    π̂ 为常数时 R² 记为 1（常数也是仿射函数）
    """
    base = np.column_stack([np.ones(Z.shape[0]), Z])
    stats = np.empty(pi_hat.shape[1])
    for j in range(pi_hat.shape[1]):
        target = pi_hat[:, j]
        centered = target - target.mean()
        tss = float(centered @ centered)
        if tss <= 1e-24 * max(1.0, float(target @ target)):
            stats[j] = 1.0
            continue
        coef = linalg.lstsq(base, target)[0]
        resid = target - base @ coef
        stats[j] = 1.0 - float(resid @ resid) / tss
    return np.clip(stats, 0.0, 1.0)


def check_identification(design: AugmentedDesign, part: Any = None) -> IdentificationReport:
    """
    识别诊断

    参数:
        design: 增广设计 Ŵ
        part: 可选的划分，给出时同时检查 Σ_k p̂_k W̄_k W̄_k' 的秩

    返回:
        报告；条件数 > 1e10 或阶条件不成立为 Fail，
        否则任一分量 R² > 0.999 为 Marginal，其余为 OK
    """
    eigenvalues, _ = spectrum(gram(design.W))
    cond = condition_number(eigenvalues)
    stats = nonlinearity_statistics(design.Z, design.pi_hat)

    d = design.d
    if part is not None:
        support = int(part.K)
        source = 'cells'
    else:
        support = int(np.unique(design.Z, axis=0).shape[0])
        source = 'distinct_z'
    order = {'support_points': support, 'source': source, 'd': d, 'satisfied': support >= d}

    failed = cond > Tolerances.CONDITION_FAIL or not order['satisfied']
    component_verdicts = tuple(
        Verdicts.FAIL if failed
        else Verdicts.MARGINAL if stat > Tolerances.NONLINEARITY_R2
        else Verdicts.OK
        for stat in stats
    )
    verdict = Verdicts.worst(component_verdicts) if component_verdicts else (
        Verdicts.FAIL if failed else Verdicts.OK
    )

    partition_ok = partition_eigs = None
    if part is not None:
        partition_eigs, _ = spectrum(gram(part.W_bar, part.probs * part.K))
        partition_ok = bool(
            partition_eigs[0] > 0
            and partition_eigs[-1] > Tolerances.SINGULARITY_RELATIVE * partition_eigs[0]
        )

    labels = ('const', *[f'z{j + 1}' for j in range(design.d_z)], *[f'pi{j + 1}' for j in range(design.d_x)])
    report = IdentificationReport(
        gram_eigenvalues=eigenvalues,
        condition_number=cond,
        nonlinearity_stat=stats,
        component_verdicts=component_verdicts,
        order_condition=order,
        verdict=verdict,
        partition_rank_ok=partition_ok,
        partition_eigenvalues=partition_eigs,
        labels=labels,
    )
    if verdict != Verdicts.OK:
        logger.warning(f"识别诊断结论: {verdict} (条件数 {cond:.3e}, R² {np.round(stats, 6).tolist()})")
    else:
        logger.info(f"识别诊断结论: OK (条件数 {cond:.3e})")
    return report
