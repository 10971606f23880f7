"""
蒙特卡洛模拟
每次重复独立生成样本、依次运行各估计量，失败按估计量计数；
结果按重复编号汇总，与线程数无关
"""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed
from threadpoolctl import threadpool_limits

from ..core.config import setup_logger
from ..core.errors import ConfigurationError, IncludedIVError
from ..estimators import EstimationContext, get_estimator
from ..estimators.disc import PartitionConfig
from ..estimators.first_stage import FirstStageConfig
from ..models.constants import DgpFamilies, EstimatorTags, FirstStageMethods, PartitionSchemes
from .dgp import DgpSpec, generate
from .summary import McSummary, summarize

logger = setup_logger(__name__)

# 进度日志间隔（占 B 的比例）
PROGRESS_FRACTION = 0.1


@dataclass
class ReplicationOutcome:
    """一次重复中各估计量的结果"""

    replication: int
    draws: Dict[str, Tuple[Tuple[str, ...], np.ndarray, np.ndarray, np.ndarray]] = field(
        default_factory=dict
    )
    errors: Dict[str, str] = field(default_factory=dict)
    flags: Dict[str, Tuple[str, ...]] = field(default_factory=dict)


def default_first_stage(family: str) -> FirstStageConfig:
    """各设计默认的第一阶段：离散 Z 用单元格均值，sim2 用核回归，sim3 用样条"""
    if family == DgpFamilies.SIM1:
        return FirstStageConfig(method=FirstStageMethods.CELL_MEANS)
    if family == DgpFamilies.SIM2:
        return FirstStageConfig(method=FirstStageMethods.NADARAYA_WATSON)
    return FirstStageConfig(method=FirstStageMethods.CUBIC_SPLINE)


def default_partition(family: str) -> PartitionConfig:
    """离散 Z 逐点划分，连续 Z 十分位划分"""
    if family == DgpFamilies.SIM1:
        return PartitionConfig(scheme=PartitionSchemes.ELEMENT_WISE)
    return PartitionConfig(scheme=PartitionSchemes.QUANTILE_RANGES, K=10)


def run_replication(
    spec: DgpSpec,
    replication: int,
    estimators: Sequence[str],
    first_stage: FirstStageConfig,
    partition: PartitionConfig,
    excluded: Optional[Sequence[int]] = None,
) -> ReplicationOutcome:
    """
    运行一次重复

    BLAS 线程限制为 1，使结果只取决于 (seed, replication)
    """
    outcome = ReplicationOutcome(replication=replication)
    with threadpool_limits(limits=1):
        sample = generate(spec, replication)
        context = EstimationContext(
            first_stage_config=first_stage,
            partition_config=partition,
            true_pi=sample.pi0,
            excluded=excluded,
        )
        for tag in estimators:
            estimator = get_estimator(tag)
            estimator.quiet = True
            try:
                result = estimator.estimate(sample.data, context)
            except IncludedIVError as e:
                outcome.errors[tag] = f"{type(e).__name__}: {e}"
                continue
            outcome.draws[tag] = (result.names, result.coef, result.ci_lower, result.ci_upper)
            outcome.flags[tag] = result.flags
    return outcome


def run_mc(
    spec: DgpSpec,
    B: int,
    estimators: Sequence[str] = EstimatorTags.SIMULATION_DEFAULT,
    first_stage: Optional[FirstStageConfig] = None,
    partition: Optional[PartitionConfig] = None,
    threads: int = 1,
    excluded: Optional[Sequence[int]] = None,
) -> McSummary:
    """
    蒙特卡洛模拟

    参数:
        spec: 模拟设定
        B: 重复次数
        estimators: 估计量标签
        first_stage: 第一阶段设置，None 时按设计取默认
        partition: 离散化估计的划分设置，None 时按设计取默认
        threads: 并行进程数
        excluded: 2SLS 排除的 Z 列，None 表示全部排除

    返回:
        各估计量 × 系数的汇总

    异常:
        ConfigurationError: B 或 threads 不合法，或估计量标签未知
    """
    if B < 1:
        raise ConfigurationError(f"重复次数 B 必须为正: {B}")
    if threads < 1:
        raise ConfigurationError(f"线程数必须为正: {threads}")
    estimators = tuple(estimators)
    for tag in estimators:
        get_estimator(tag)

    first_stage = first_stage or default_first_stage(spec.family)
    partition = partition or default_partition(spec.family)
    logger.info(
        f"开始模拟: {DgpFamilies.get_name(spec.family)}, n={spec.n}, ρ={spec.rho}, B={B}, "
        f"估计量 {', '.join(estimators)}, 线程 {threads}"
    )

    step = max(1, int(B * PROGRESS_FRACTION))
    jobs = (
        delayed(run_replication)(spec, b, estimators, first_stage, partition, excluded)
        for b in range(B)
    )
    outcomes: List[ReplicationOutcome] = []
    for outcome in Parallel(n_jobs=threads, return_as='generator')(jobs):
        outcomes.append(outcome)
        if len(outcomes) % step == 0 or len(outcomes) == B:
            logger.info(f"进度: {len(outcomes)}/{B}")

    draws: Dict[str, list] = {tag: [] for tag in estimators}
    failures: Counter = Counter()
    flag_counts: Dict[str, Counter] = {tag: Counter() for tag in estimators}
    first_error: Dict[str, str] = {}
    for outcome in outcomes:
        for tag in estimators:
            if tag in outcome.draws:
                draws[tag].append(outcome.draws[tag])
                flag_counts[tag].update(outcome.flags.get(tag, ()))
            else:
                failures[tag] += 1
                first_error.setdefault(tag, outcome.errors.get(tag, ''))

    for tag, count in failures.items():
        logger.warning(f"{tag}: {count}/{B} 次重复失败 (首个错误: {first_error[tag]})")
    for tag, counts in flag_counts.items():
        for flag, count in sorted(counts.items()):
            logger.info(f"{tag}: 标记 {flag} 出现 {count}/{B} 次")

    truth = generate(spec, 0).truth
    summary = summarize(
        n=spec.n,
        B=B,
        estimator_tags=estimators,
        draws=draws,
        truth=truth,
        failures=dict(failures),
        flag_counts={tag: dict(counts) for tag, counts in flag_counts.items()},
    )
    for tag in summary.unavailable:
        logger.error(f"{tag}: 所有重复均失败，汇总不可用")
    logger.info("模拟完成")
    return summary
