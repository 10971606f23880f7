"""
IO 模块
提供 JSON 读写以及 csv/json/md 三种格式的统一表格输出
"""

import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

TABLE_FORMATS = ('csv', 'json', 'md')


def load_json(file_path: str) -> Any:
    """
    加载 JSON 文件

    参数:
        file_path: JSON 文件路径

    返回:
        解析后的数据

    异常:
        FileNotFoundError: 文件不存在
        json.JSONDecodeError: JSON 解析失败
    """
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def save_json(data: Any, file_path: str, indent: int = 2) -> None:
    """
    保存数据为 JSON 文件

    参数:
        data: 要保存的数据（可包含 numpy 数组和标量）
        file_path: 保存路径
        indent: 缩进空格数
    """
    _ensure_parent(file_path)

    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(dumps_json(data, indent=indent))


def dumps_json(data: Any, indent: Optional[int] = 2) -> str:
    """把数据序列化为 JSON 字符串，numpy 类型转换为原生类型，非有限浮点数写为 null"""
    return json.dumps(to_native(data), ensure_ascii=False, indent=indent, allow_nan=False)


def to_native(value: Any) -> Any:
    """递归地把 numpy 数组/标量转换为 JSON 可表示的原生类型"""
    if isinstance(value, dict):
        return {str(k): to_native(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_native(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_native(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def records_to_frame(records: Sequence[Dict[str, Any]], columns: Optional[List[str]] = None) -> pd.DataFrame:
    """把记录列表转换为 DataFrame，列顺序固定"""
    frame = pd.DataFrame(list(records))
    if columns is not None:
        frame = frame.reindex(columns=columns)
    return frame


def render_markdown(frame: pd.DataFrame) -> str:
    """把表格渲染为 markdown 文本；浮点数保留 3 位，非有限值写为 nan"""

    def cell(value: Any) -> str:
        if isinstance(value, (float, np.floating)):
            return f'{value:.3f}' if np.isfinite(value) else 'nan'
        return str(value)

    lines = [
        '| ' + ' | '.join(str(c) for c in frame.columns) + ' |',
        '|' + '|'.join('---' for _ in frame.columns) + '|',
    ]
    for row in frame.itertuples(index=False):
        lines.append('| ' + ' | '.join(cell(v) for v in row) + ' |')
    return '\n'.join(lines) + '\n'


def save_table(
    records: Sequence[Dict[str, Any]],
    file_path: str,
    fmt: str,
    metadata: Optional[Dict[str, Any]] = None,
    columns: Optional[List[str]] = None,
) -> None:
    """
    以统一的序列化方式保存表格

    参数:
        records: 行记录列表
        file_path: 保存路径
        fmt: csv / json / md
        metadata: 附加到输出中的元信息（配置、种子、版本）
        columns: 列顺序

    异常:
        ValueError: 不支持的格式
    """
    if fmt not in TABLE_FORMATS:
        raise ValueError(f"不支持的输出格式: {fmt}，支持: {', '.join(TABLE_FORMATS)}")

    metadata = metadata or {}
    if fmt == 'json':
        save_json({**metadata, 'table': list(records)}, file_path)
        return

    _ensure_parent(file_path)
    frame = records_to_frame(records, columns)
    header = [f'# {key}: {dumps_json(value, indent=None)}' for key, value in metadata.items()]
    with open(file_path, 'w', encoding='utf-8', newline='') as f:
        if fmt == 'csv':
            for line in header:
                f.write(line + '\n')
            frame.to_csv(f, index=False, lineterminator='\n')
        else:
            for line in header:
                f.write(line + '\n\n')
            f.write(render_markdown(frame))


def _ensure_parent(file_path: str) -> None:
    # 确保目录存在
    os.makedirs(os.path.dirname(file_path) if os.path.dirname(file_path) else '.', exist_ok=True)
