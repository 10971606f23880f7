"""
核心工具模块
提供配置、IO、异常层级等基础功能
"""

from .config import configure_logging, get_default_threads, get_output_path, setup_logger
from .errors import (
    ConfigurationError,
    DataError,
    FirstStageError,
    IdentificationError,
    IncludedIVError,
    NumericError,
)
from .io import dumps_json, load_json, save_json, save_table

__all__ = [
    'configure_logging',
    'get_default_threads',
    'get_output_path',
    'setup_logger',
    'load_json',
    'save_json',
    'dumps_json',
    'save_table',
    'IncludedIVError',
    'DataError',
    'ConfigurationError',
    'IdentificationError',
    'NumericError',
    'FirstStageError',
]
