"""
配置模块
提供日志设置、输出路径和环境变量等基础功能
"""

import logging
import os
from pathlib import Path
from typing import Dict, Optional

THREADS_ENV_VAR = 'INCLUDED_IV_THREADS'

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

# 所有模块共用同一个输出处理器，命令行可统一调整级别与日志文件
_handler = logging.StreamHandler()
_handler.setFormatter(logging.Formatter(LOG_FORMAT))
_loggers: Dict[str, logging.Logger] = {}
_level = logging.INFO
_file_handler: Optional[logging.Handler] = None


def setup_logger(name: str) -> logging.Logger:
    """
    设置日志记录器

    参数:
        name: 日志记录器名称

    返回:
        配置好的日志记录器
    """
    logger = logging.getLogger(name)
    if name not in _loggers:
        if _handler not in logger.handlers:
            logger.addHandler(_handler)
        if _file_handler is not None:
            logger.addHandler(_file_handler)
        logger.setLevel(_level)
        _loggers[name] = logger
    return logger


def configure_logging(verbose: bool = False, log_file: Optional[str] = None) -> None:
    """
    统一设置所有日志记录器的级别，并可选地追加日志文件

    参数:
        verbose: True 时输出 DEBUG 级别
        log_file: 日志文件路径
    """
    global _level, _file_handler
    _level = logging.DEBUG if verbose else logging.INFO
    if _file_handler is not None:
        for logger in _loggers.values():
            logger.removeHandler(_file_handler)
        _file_handler.close()
        _file_handler = None
    if log_file:
        _file_handler = logging.FileHandler(log_file, encoding='utf-8')
        _file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    for logger in _loggers.values():
        logger.setLevel(_level)
        if _file_handler is not None:
            logger.addHandler(_file_handler)


def get_output_path(relative_path: str = '') -> Path:
    """
    获取输出文件的绝对路径

    参数:
        relative_path: 相对于 output 目录的路径

    返回:
        绝对路径
    """
    # src/core/config.py -> 项目根目录
    project_root = Path(__file__).resolve().parent.parent.parent
    output_dir = project_root / 'output'

    if relative_path:
        return output_dir / relative_path
    return output_dir


def get_default_threads() -> int:
    """
    读取默认线程数

    返回:
        环境变量 INCLUDED_IV_THREADS 的值，未设置或不合法时为 1
    """
    raw = os.environ.get(THREADS_ENV_VAR, '')
    try:
        threads = int(raw)
    except ValueError:
        return 1
    return max(threads, 1)
