"""
特征缓存文件

格式：魔数 b"SSLM"、版本、n_frames、n_mels（均为小端 u32），
随后是行优先的小端 float32。
"""

import struct
from pathlib import Path

import numpy as np

from errors import ArtifactIOError, CorruptFile, VersionMismatch


CACHE_MAGIC = b"SSLM"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIII")


def write_feature_cache(path: str | Path, values: np.ndarray) -> None:
    """写出特征矩阵 (n_frames, n_mels)"""
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError(f"特征矩阵必须是二维，当前形状 {values.shape}")
    n_frames, n_mels = values.shape
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as f:
            f.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, n_frames, n_mels))
            f.write(np.ascontiguousarray(values, dtype="<f4").tobytes())
    except OSError as e:
        raise ArtifactIOError(f"写出特征缓存失败: {path}: {e}") from e


def read_feature_cache(path: str | Path) -> np.ndarray:
    """读取特征矩阵，返回 float32 数组 (n_frames, n_mels)"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"读取特征缓存失败: {path}: {e}") from e

    if len(data) < _HEADER.size:
        raise CorruptFile(f"特征缓存过短: {path}")
    magic, version, n_frames, n_mels = _HEADER.unpack_from(data, 0)
    if magic != CACHE_MAGIC:
        raise CorruptFile(f"特征缓存魔数错误: {path}")
    if version != CACHE_VERSION:
        raise VersionMismatch(f"特征缓存版本 {version}，期望 {CACHE_VERSION}")
    expected = _HEADER.size + n_frames * n_mels * 4
    if len(data) != expected:
        raise CorruptFile(f"特征缓存长度 {len(data)}，期望 {expected}: {path}")

    values = np.frombuffer(data, dtype="<f4", offset=_HEADER.size)
    return values.reshape(n_frames, n_mels).astype(np.float32)
