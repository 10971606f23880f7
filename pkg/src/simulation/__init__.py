"""
模拟模块
数据生成过程、蒙特卡洛循环与汇总
"""

from .dgp import DgpSpec, SimulatedSample, generate, sim1_support, true_pi
from .harness import default_first_stage, default_partition, run_mc, run_replication
from .summary import SUMMARY_COLUMNS, CoefficientSummary, McSummary, summarize_draws

__all__ = [
    'DgpSpec',
    'SimulatedSample',
    'generate',
    'sim1_support',
    'true_pi',
    'default_first_stage',
    'default_partition',
    'run_mc',
    'run_replication',
    'SUMMARY_COLUMNS',
    'CoefficientSummary',
    'McSummary',
    'summarize_draws',
]
