"""
无排除工具变量的内生回归
把内生回归元对外生回归元做条件均值投影，从而在没有排除工具的情况下识别并估计
线性、非线性与分位数回归模型

包结构:
- core: 核心工具模块（配置、IO、异常、线性代数）
- models: 常量和数据模型定义
- estimators: 第一阶段、线性、离散化、非线性与分位数估计量
- inference: 方差与置信区间
- diagnostics: 识别诊断
- simulation: 蒙特卡洛模拟
- cli: 命令行接口
"""

__version__ = "1.0.0"
__author__ = "Included IV Team"

from .core import load_json, save_json, setup_logger
from .diagnostics import check_identification
from .estimators import EstimationContext, get_estimator
from .estimators.disc import fit_theta_disc, make_partition
from .estimators.first_stage import FirstStageConfig, fit_first_stage
from .estimators.linear import fit_ols, fit_theta_hat, fit_theta_star, fit_tsls_excluded
from .estimators.nonlinear import fit_nonlinear, fit_quantile
from .models import Dataset, EstimateResult, Theta, build_design
from .simulation import DgpSpec, generate, run_mc

__all__ = [
    # 数据
    'Dataset',
    'EstimateResult',
    'Theta',
    'build_design',
    # 估计
    'FirstStageConfig',
    'fit_first_stage',
    'fit_theta_hat',
    'fit_theta_star',
    'fit_theta_disc',
    'make_partition',
    'fit_ols',
    'fit_tsls_excluded',
    'fit_nonlinear',
    'fit_quantile',
    'EstimationContext',
    'get_estimator',
    # 诊断与模拟
    'check_identification',
    'DgpSpec',
    'generate',
    'run_mc',
    # 核心工具
    'load_json',
    'save_json',
    'setup_logger',
]
