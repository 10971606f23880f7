"""
命令行入口
提供 estimate / simulate / diagnose 三个子命令
"""

import argparse
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .. import __version__
from ..core import configure_logging, dumps_json, save_table, setup_logger
from ..core.errors import (
    ConfigurationError,
    FirstStageError,
    IdentificationError,
    IncludedIVError,
)
from ..core.io import records_to_frame, render_markdown
from ..diagnostics import check_identification
from ..estimators import EstimationContext, get_estimator
from ..estimators.disc import PartitionConfig, partition_from_config
from ..estimators.first_stage import FirstStageConfig, fit_first_stage
from ..models.constants import (
    DgpFamilies,
    EstimatorTags,
    ExitCodes,
    FirstStageMethods,
    PartitionSchemes,
)
from ..models.data import Dataset, build_design
from ..simulation import SUMMARY_COLUMNS, DgpSpec, run_mc
from .ingest import ingest_csv
from .run_config import RunConfig, resolve_config

logger = setup_logger(__name__)

COEFFICIENT_COLUMNS = ['estimator', 'coef', 'estimate', 'se', 'ci_lower', 'ci_upper']
DIAGNOSE_COLUMNS = ['component', 'nonlinearity_stat', 'verdict']

# Z 的不同取值数不超过 n 的该比例时默认使用单元格均值
DISCRETE_FRACTION = 0.1


class CliArgumentParser(argparse.ArgumentParser):
    """参数错误转换为 ConfigurationError，退出码与其他用法错误一致"""

    def error(self, message: str):
        raise ConfigurationError(f"参数错误: {message}")


def setup_logging(verbose: bool = False, log_file: Optional[str] = None) -> None:
    """设置日志"""
    configure_logging(verbose, log_file)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='JSON 配置文件，命令行参数优先')
    parser.add_argument('--first-stage', dest='first_stage', choices=FirstStageMethods.CHOICES)
    parser.add_argument('--bandwidth', help='核回归带宽候选，逗号分隔')
    parser.add_argument('--df', type=int, help='样条自由度（不指定时交叉验证）')
    parser.add_argument('--max-cells', dest='max_cells', type=int, help='单元格均值的取值数上限')
    parser.add_argument('--estimators', help='估计量标签，逗号分隔')
    parser.add_argument('--partition', choices=PartitionSchemes.CHOICES, help='离散化估计的划分方式')
    parser.add_argument('-K', dest='K', type=int, help='划分单元格数')
    parser.add_argument('--min-count', dest='min_count', type=int, help='单元格最小样本数')
    parser.add_argument('--breakpoints', help='user 划分的断点，逗号分隔（一元 Z）')
    parser.add_argument('--exclude', help='2SLS 排除的外生回归元，逗号分隔（默认全部）')
    parser.add_argument('--homoskedastic', action='store_true', default=None, help='同方差方差估计')
    parser.add_argument('--format', choices=('csv', 'json', 'md'), help='输出格式 (默认: csv)')
    parser.add_argument('--output', '-o', help='输出文件路径 (默认: ./output/<命令>.<格式>)')
    parser.add_argument('--verbose', '-v', action='store_true', default=None, help='显示详细日志')
    parser.add_argument('--log-file', dest='log_file', help='同时写入日志文件')


def _add_data(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--data', help='输入 CSV 文件（带表头）')
    parser.add_argument('--y', help='结果变量列')
    parser.add_argument('--z', help='外生回归元列，逗号分隔')
    parser.add_argument('--x', help='内生回归元列，逗号分隔')


def build_parser() -> argparse.ArgumentParser:
    """构造参数解析器"""
    parser = CliArgumentParser(
        prog='included-iv',
        description='无排除工具变量的内生回归估计工具',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog='''
示例:
  %(prog)s estimate --data f.csv --y lw --z exper,black --x educ --first-stage nw
  %(prog)s diagnose --data f.csv --y lw --z exper --x educ
  %(prog)s simulate --dgp sim1 --n 1000 --rho 0.5 --beta 1 --B 200 --seed 7
        ''',
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', required=True)

    estimate = subparsers.add_parser('estimate', help='在 CSV 数据上估计')
    _add_data(estimate)
    estimate.add_argument('--tau', type=float, help='分位数估计的 τ (默认: 0.5)')
    estimate.add_argument('--model', help='非线性估计的内置模型: linear / exp-index')
    _add_common(estimate)

    diagnose = subparsers.add_parser('diagnose', help='识别诊断（结论为 Fail 时也正常退出）')
    _add_data(diagnose)
    _add_common(diagnose)

    simulate = subparsers.add_parser('simulate', help='蒙特卡洛模拟')
    simulate.add_argument('--dgp', choices=DgpFamilies.CHOICES)
    simulate.add_argument('--n', help='样本量，逗号分隔可给出多个')
    simulate.add_argument('--rho', type=float, help='ε 与 u 的相关系数 (默认: 0.5)')
    simulate.add_argument('--beta', help='β₀，单个值广播到所有 Z 分量')
    simulate.add_argument('--B', dest='B', type=int, help='重复次数 (默认: 200)')
    simulate.add_argument('--seed', type=int, help='基础种子 (默认: 0)')
    simulate.add_argument('--threads', type=int, help='并行进程数（也可用环境变量 INCLUDED_IV_THREADS）')
    _add_common(simulate)
    return parser


def _metadata(config: RunConfig) -> Dict[str, Any]:
    return {'config': config.to_dict(), 'seed': config.seed, 'version': __version__}


def choose_first_stage(data: Dataset, config: RunConfig) -> FirstStageConfig:
    """未指定第一阶段时：Z 取值较少用单元格均值，否则用核回归"""
    chosen = config.first_stage_config()
    if chosen is not None:
        return chosen
    distinct = np.unique(data.Z, axis=0).shape[0]
    if distinct <= min(config.max_cells, DISCRETE_FRACTION * data.n):
        method = FirstStageMethods.CELL_MEANS
    else:
        method = FirstStageMethods.NADARAYA_WATSON
    logger.info(f"第一阶段: {FirstStageMethods.get_name(method)} (Z 有 {distinct} 个不同取值)")
    return FirstStageConfig(method=method, max_cells=config.max_cells)


def choose_partition(config: RunConfig, first_stage: FirstStageConfig) -> Optional[PartitionConfig]:
    """未指定划分时：单元格均值配逐点划分，其余交给离散化估计的默认值"""
    chosen = config.partition_config()
    if chosen is not None or first_stage.method != FirstStageMethods.CELL_MEANS:
        return chosen
    return PartitionConfig(
        scheme=PartitionSchemes.ELEMENT_WISE,
        min_count=config.min_count,
        max_cells=config.max_cells,
    )


def _context(data: Dataset, config: RunConfig) -> EstimationContext:
    first_stage = choose_first_stage(data, config)
    return EstimationContext(
        first_stage_config=first_stage,
        partition_config=choose_partition(config, first_stage),
        tau=config.tau,
        model_name=config.model,
        excluded=config.excluded_indices(),
        homoskedastic=config.homoskedastic,
    )


def run_estimate(config: RunConfig) -> List[Dict[str, Any]]:
    """
    在 CSV 数据上运行各估计量

    返回:
        系数表记录

    异常:
        IdentificationError: 任一估计量的识别条件不成立
    """
    data = ingest_csv(config.data, config.roles())
    context = _context(data, config)
    fit = context.first_stage(data)
    report = check_identification(build_design(data, fit))

    records: List[Dict[str, Any]] = []
    estimator_info: Dict[str, Any] = {}
    for tag in config.estimator_tags():
        logger.info(f"估计: {EstimatorTags.get_name(tag)}")
        result = get_estimator(tag).estimate(data, context)
        records.extend(result.to_records())
        estimator_info[tag] = {
            'flags': list(result.flags),
            'condition_number': result.condition_number,
        }

    metadata = {
        **_metadata(config),
        'n': data.n,
        'first_stage': fit.describe(),
        'diagnostics': report.to_dict(),
        'estimators': estimator_info,
    }
    save_table(records, config.output_path(), config.format, metadata, COEFFICIENT_COLUMNS)
    return records


def run_diagnose(config: RunConfig) -> List[Dict[str, Any]]:
    """
    识别诊断；结论为 Fail 不视为错误

    返回:
        每个内生分量一行的诊断记录
    """
    data = ingest_csv(config.data, config.roles())
    first_stage = choose_first_stage(data, config)
    fit = fit_first_stage(data, first_stage)
    design = build_design(data, fit)

    part = None
    partition_note = None
    partition = choose_partition(config, first_stage)
    try:
        part = partition_from_config(data, partition or _default_partition(data, config))
    except (IdentificationError, FirstStageError) as e:
        partition_note = f"划分无法构造: {e}"
        logger.warning(partition_note)

    report = check_identification(design, part)
    if partition_note:
        report = replace(report, notes=(*report.notes, partition_note))

    records = [
        {'component': name, 'nonlinearity_stat': float(stat), 'verdict': verdict}
        for name, stat, verdict in zip(data.x_names, report.nonlinearity_stat, report.component_verdicts)
    ]
    metadata = {
        **_metadata(config),
        'n': data.n,
        'first_stage': fit.describe(),
        'report': report.to_dict(),
    }
    save_table(records, config.output_path(), config.format, metadata, DIAGNOSE_COLUMNS)
    logger.info(f"诊断结论: {report.verdict}")
    return records


def _default_partition(data: Dataset, config: RunConfig) -> PartitionConfig:
    scheme = (
        PartitionSchemes.QUANTILE_RANGES if data.d_z == 1 else PartitionSchemes.PRODUCT_QUANTILES
    )
    return PartitionConfig(scheme=scheme, K=config.K, min_count=config.min_count)


def run_simulate(config: RunConfig) -> List[Dict[str, Any]]:
    """
    对每个样本量运行蒙特卡洛模拟

    返回:
        汇总表记录（各样本量依次排列）
    """
    records: List[Dict[str, Any]] = []
    failures: Dict[str, Any] = {}
    unavailable: Dict[str, Any] = {}
    flag_counts: Dict[str, Any] = {}
    for n in config.n:
        spec = DgpSpec(
            family=config.dgp,
            n=n,
            rho=config.rho,
            beta0=config.beta,
            seed=config.seed,
        )
        summary = run_mc(
            spec,
            config.B,
            estimators=config.estimator_tags(),
            first_stage=config.first_stage_config(),
            partition=config.partition_config(),
            threads=config.threads,
            excluded=_simulation_excluded(spec, config.exclude),
        )
        records.extend(summary.to_records())
        failures[str(n)] = summary.failures
        unavailable[str(n)] = list(summary.unavailable)
        flag_counts[str(n)] = summary.flag_counts

    metadata = {
        **_metadata(config),
        'failures': failures,
        'unavailable': unavailable,
        'flag_counts': flag_counts,
    }
    save_table(records, config.output_path(), config.format, metadata, SUMMARY_COLUMNS)
    return records


def _simulation_excluded(spec: DgpSpec, exclude: Optional[Sequence[str]]) -> Optional[Sequence[int]]:
    if exclude is None:
        return None
    unknown = [c for c in exclude if c not in spec.z_names]
    if unknown:
        raise ConfigurationError(
            f"--exclude 中的列不在 {spec.family} 的 Z 中 ({', '.join(spec.z_names)}): {', '.join(unknown)}"
        )
    return [spec.z_names.index(c) for c in exclude]


COMMANDS = {
    'estimate': run_estimate,
    'diagnose': run_diagnose,
    'simulate': run_simulate,
}


def run(config: RunConfig) -> int:
    """
    执行一条命令

    返回:
        退出码：0 成功，1 用法或 IO 错误，2 识别失败，3 数值失败
    """
    records = COMMANDS[config.command](config)
    columns = {
        'estimate': COEFFICIENT_COLUMNS,
        'diagnose': DIAGNOSE_COLUMNS,
        'simulate': SUMMARY_COLUMNS,
    }[config.command]
    if records:
        print(render_markdown(records_to_frame(records, columns)), end='')
    logger.info(f"结果已保存到: {config.output_path()}")
    return ExitCodes.OK


def _report_error(payload: Dict[str, Any]) -> None:
    print(dumps_json(payload, indent=None))


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = resolve_config(args)
        setup_logging(config.verbose, config.log_file)
        return run(config)
    except IncludedIVError as e:
        logger.error(f"{type(e).__name__}: {e}")
        _report_error(e.to_dict())
        return e.exit_code
    except OSError as e:
        logger.error(f"IO 错误: {e}")
        _report_error({'error': type(e).__name__, 'message': str(e), 'exit_code': ExitCodes.USAGE})
        return ExitCodes.USAGE


if __name__ == '__main__':
    sys.exit(main())
