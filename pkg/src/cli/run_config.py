"""
运行配置
按 内置默认值 < JSON 配置文件 < 环境变量 < 命令行参数 的优先级解析 RunConfig
"""

import argparse
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional, Tuple

from ..core.config import THREADS_ENV_VAR, get_default_threads, get_output_path
from ..core.errors import ConfigurationError
from ..core.io import TABLE_FORMATS, load_json
from ..estimators import get_estimator
from ..estimators.disc import PartitionConfig
from ..estimators.first_stage import FirstStageConfig
from ..estimators.nonlinear import BUILTIN_MODELS
from ..models.constants import DgpFamilies, EstimatorTags, FirstStageMethods, PartitionSchemes
from .ingest import ColumnRoles

COMMANDS = ('estimate', 'simulate', 'diagnose')

# 不写入输出文件的运行参数（不影响结果）
RUNTIME_ONLY = ('threads', 'output', 'verbose', 'log_file')

ESTIMATE_DEFAULT = (
    EstimatorTags.THETA,
    EstimatorTags.THETA_STAR,
    EstimatorTags.DISC,
    EstimatorTags.OLS,
)


@dataclass(frozen=True)
class RunConfig:
    """一次命令行运行的完整配置"""

    command: str
    # estimate / diagnose
    data: Optional[str] = None
    y: Optional[str] = None
    z: Tuple[str, ...] = ()
    x: Tuple[str, ...] = ()
    # 第一阶段
    first_stage: Optional[str] = None
    bandwidth: Optional[Tuple[float, ...]] = None
    df: Optional[int] = None
    max_cells: int = 1024
    # 估计量
    estimators: Optional[Tuple[str, ...]] = None
    partition: Optional[str] = None
    K: Optional[int] = None
    min_count: int = 5
    breakpoints: Optional[Tuple[float, ...]] = None
    tau: float = 0.5
    model: str = 'linear'
    exclude: Optional[Tuple[str, ...]] = None
    homoskedastic: bool = False
    # simulate
    dgp: Optional[str] = None
    n: Tuple[int, ...] = (1000,)
    rho: float = 0.5
    beta: Tuple[float, ...] = (1.0,)
    B: int = 200
    seed: int = 0
    # 输出与运行
    format: str = 'csv'
    output: Optional[str] = None
    threads: int = 1
    verbose: bool = False
    log_file: Optional[str] = None

    def validate(self) -> 'RunConfig':
        """
        检查配置的一致性

        异常:
            ConfigurationError: 命令、列角色、估计量或输出格式不合法
        """
        if self.command not in COMMANDS:
            raise ConfigurationError(f"未知命令: {self.command}，支持: {', '.join(COMMANDS)}")
        if self.format not in TABLE_FORMATS:
            raise ConfigurationError(
                f"不支持的输出格式: {self.format}，支持: {', '.join(TABLE_FORMATS)}"
            )
        if self.threads < 1:
            raise ConfigurationError(f"线程数必须为正: {self.threads}")
        if self.first_stage is not None and self.first_stage not in FirstStageMethods.CHOICES:
            raise ConfigurationError(
                f"未知的第一阶段方法: {self.first_stage}，支持: {', '.join(FirstStageMethods.CHOICES)}"
            )
        if self.partition is not None and self.partition not in PartitionSchemes.CHOICES:
            raise ConfigurationError(
                f"未知的划分方式: {self.partition}，支持: {', '.join(PartitionSchemes.CHOICES)}"
            )
        if self.model not in BUILTIN_MODELS:
            raise ConfigurationError(f"未知的模型: {self.model}，支持: {', '.join(BUILTIN_MODELS)}")
        for tag in self.estimators or ():
            get_estimator(tag)

        if self.command == 'simulate':
            if self.dgp not in DgpFamilies.CHOICES:
                raise ConfigurationError(
                    f"simulate 需要 --dgp，支持: {', '.join(DgpFamilies.CHOICES)}"
                )
            if self.B < 1:
                raise ConfigurationError(f"重复次数 B 必须为正: {self.B}")
        else:
            if not self.data:
                raise ConfigurationError(f"{self.command} 需要 --data")
            roles = self.roles()
            if self.exclude:
                unknown = [c for c in self.exclude if c not in roles.z]
                if unknown:
                    raise ConfigurationError(f"--exclude 中的列不是外生回归元: {', '.join(unknown)}")
        return self

    def roles(self) -> ColumnRoles:
        return ColumnRoles(y=self.y or '', z=self.z, x=self.x)

    def estimator_tags(self) -> Tuple[str, ...]:
        if self.estimators:
            return self.estimators
        if self.command == 'simulate':
            return EstimatorTags.SIMULATION_DEFAULT
        return ESTIMATE_DEFAULT

    def first_stage_config(self) -> Optional[FirstStageConfig]:
        """未指定方法时返回 None，由调用方按数据决定"""
        if self.first_stage is None:
            return None
        return FirstStageConfig(
            method=self.first_stage,
            bandwidth_grid=self.bandwidth,
            df=self.df,
            max_cells=self.max_cells,
        )

    def partition_config(self) -> Optional[PartitionConfig]:
        if self.partition is None:
            return None
        breakpoints = None if self.breakpoints is None else (tuple(self.breakpoints),)
        return PartitionConfig(
            scheme=self.partition,
            K=self.K,
            min_count=self.min_count,
            breakpoints=breakpoints,
            max_cells=self.max_cells,
        )

    def excluded_indices(self) -> Optional[Tuple[int, ...]]:
        if self.exclude is None:
            return None
        return tuple(self.z.index(c) for c in self.exclude)

    def output_path(self) -> str:
        if self.output:
            return self.output
        return str(get_output_path(f'{self.command}.{self.format}'))

    def to_dict(self) -> Dict[str, Any]:
        """
        写入输出文件的配置

        线程数、输出位置与日志设置不影响结果，不写入，
        因此相同种子在不同线程数下的输出逐字节相同
        """
        payload = asdict(self)
        for key in RUNTIME_ONLY:
            payload.pop(key, None)
        payload['estimators'] = list(self.estimator_tags())
        return payload


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))
TUPLE_FIELDS = ('z', 'x', 'bandwidth', 'estimators', 'breakpoints', 'exclude', 'n', 'beta')


def _normalize(values: Dict[str, Any], source: str) -> Dict[str, Any]:
    unknown = sorted(set(values) - set(FIELD_NAMES))
    if unknown:
        raise ConfigurationError(f"{source} 中有未知的配置项: {', '.join(unknown)}")
    normalized = dict(values)
    for key in TUPLE_FIELDS:
        value = normalized.get(key)
        if value is None:
            continue
        if isinstance(value, str):
            value = split_list(value)
        elif not isinstance(value, (list, tuple)):
            value = [value]
        normalized[key] = tuple(value)
    return normalized


def split_list(text: str) -> Tuple[str, ...]:
    """逗号分隔的列表，忽略空白项"""
    return tuple(item.strip() for item in text.split(',') if item.strip())


def load_config_file(path: str) -> Dict[str, Any]:
    """
    读取 JSON 配置文件

    异常:
        ConfigurationError: 文件无法读取或不是 JSON 对象
    """
    try:
        values = load_json(path)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"无法读取配置文件 {path}: {e}", path=path) from e
    if not isinstance(values, dict):
        raise ConfigurationError(f"配置文件 {path} 必须是 JSON 对象")
    values.pop('command', None)
    return _normalize(values, path)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """
    解析运行配置

    参数:
        args: 命令行参数；值为 None 的项视为未指定

    返回:
        校验后的配置
    """
    config = RunConfig(command=args.command)

    config_file = getattr(args, 'config', None)
    if config_file:
        config = replace(config, **load_config_file(config_file))

    if os.environ.get(THREADS_ENV_VAR):
        config = replace(config, threads=get_default_threads())

    flags = {
        key: value
        for key, value in vars(args).items()
        if key in FIELD_NAMES and key != 'command' and value is not None
    }
    config = replace(config, **_normalize(flags, '命令行参数'))
    return _coerce(config).validate()


def _coerce(config: RunConfig) -> RunConfig:
    try:
        return replace(
            config,
            bandwidth=None if config.bandwidth is None else tuple(float(b) for b in config.bandwidth),
            breakpoints=(
                None if config.breakpoints is None else tuple(float(b) for b in config.breakpoints)
            ),
            n=tuple(int(v) for v in config.n),
            beta=tuple(float(b) for b in config.beta),
            B=int(config.B),
            seed=int(config.seed),
            threads=int(config.threads),
            tau=float(config.tau),
            rho=float(config.rho),
        )
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"配置项类型错误: {e}") from e
