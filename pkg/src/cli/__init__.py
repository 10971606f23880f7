"""
CLI 模块
命令行接口、CSV 读写与运行配置解析
"""

from .ingest import ColumnRoles, ingest_csv, write_csv
from .main import main, run
from .run_config import RunConfig, resolve_config

__all__ = ['ColumnRoles', 'RunConfig', 'ingest_csv', 'main', 'resolve_config', 'run', 'write_csv']
