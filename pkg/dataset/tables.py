"""
CSV 表格读写

所有表格均为 UTF-8、逗号分隔、带表头。读取时一律按字符串载入，
再由调用方做带行号的校验。
"""

from pathlib import Path
from typing import Iterable

import pandas as pd

from errors import ArtifactIOError, ParseError


def read_table(path: str | Path, required: Iterable[str]) -> pd.DataFrame:
    """
    读取 CSV 表格并检查必需列

    Args:
        path: 文件路径
        required: 必需的列名

    Returns:
        所有单元格为字符串的 DataFrame
    """
    path = Path(path)
    if not path.exists():
        raise ArtifactIOError(f"文件不存在: {path}")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ParseError(f"无法解析 CSV: {e}", path=str(path)) from e

    for column in required:
        if column not in frame.columns:
            raise ParseError("缺少列", path=str(path), line=1, field=column)
    return frame


def write_table(path: str | Path, rows: list[dict], columns: list[str]) -> None:
    """
    写出 CSV 表格（行为空时只写表头）

    Args:
        path: 文件路径
        rows: 行字典列表
        columns: 列顺序
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(rows, columns=columns)
        frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    except OSError as e:
        raise ArtifactIOError(f"写出表格失败: {path}: {e}") from e


def line_of(index: int) -> int:
    """DataFrame 行索引对应的文件行号（表头为第 1 行）"""
    return int(index) + 2
