"""
无排除工具变量的内生回归

使用方法:
    from included_iv import Dataset, FirstStageConfig, fit_first_stage, fit_theta_hat

    # 构造样本
    data = Dataset(y=y, Z=Z, X=X)

    # 第一阶段与两步估计
    fit = fit_first_stage(data, FirstStageConfig(method='nw'))
    result = fit_theta_hat(data, fit)

命令行使用:
    included-iv estimate --data f.csv --y lw --z exper,black --x educ
"""

__version__ = "1.0.0"
__author__ = "Included IV Team"

from .src import (
    Dataset,
    DgpSpec,
    EstimateResult,
    FirstStageConfig,
    check_identification,
    fit_first_stage,
    fit_nonlinear,
    fit_ols,
    fit_quantile,
    fit_theta_disc,
    fit_theta_hat,
    fit_theta_star,
    fit_tsls_excluded,
    run_mc,
)

__all__ = [
    '__version__',
    '__author__',
    'Dataset',
    'DgpSpec',
    'EstimateResult',
    'FirstStageConfig',
    'check_identification',
    'fit_first_stage',
    'fit_nonlinear',
    'fit_ols',
    'fit_quantile',
    'fit_theta_disc',
    'fit_theta_hat',
    'fit_theta_star',
    'fit_tsls_excluded',
    'run_mc',
]
