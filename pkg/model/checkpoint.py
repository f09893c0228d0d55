"""
模型检查点

二进制布局（全部小端）：
    magic        4 字节 b"SSCK"
    version      u32
    header_len   u32，随后是 UTF-8 JSON 头（model_config 与 metadata）
    n_tensors    u32
    每个张量：name_len u32、UTF-8 名称、rank u32、rank 个 u32 维度、float32 数据
    crc32        u32，覆盖此前所有字节

张量表包含全部参数、批归一化滑动统计量以及输入标准化统计量。
"""

import json
import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from config_loader import ModelConfig
from errors import (
    ArtifactIOError,
    CorruptFile,
    IncompatibleBackbone,
    ShapeMismatch,
    VersionMismatch,
)
from model.cnn14 import HEAD_NAMES, INPUT_MEAN_NAME, INPUT_STD_NAME, Cnn14Regressor


logger = logging.getLogger(__name__)

MAGIC = b"SSCK"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """检查点内容"""
    model_config: ModelConfig
    tensors: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION


def checkpoint_from_model(model: Cnn14Regressor, metadata: Optional[dict] = None) -> Checkpoint:
    """把模型当前状态打包为 Checkpoint（数组为拷贝）"""
    tensors = model.state_dict()
    if model.is_standardized:
        tensors[INPUT_MEAN_NAME] = model.input_mean.copy()
        tensors[INPUT_STD_NAME] = model.input_std.copy()
    return Checkpoint(model_config=model.config, tensors=tensors, metadata=dict(metadata or {}))


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = json.dumps(
        {"model_config": checkpoint.model_config.model_dump(mode="json"),
         "metadata": checkpoint.metadata},
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    parts = [MAGIC, struct.pack("<II", checkpoint.format_version, len(header)), header,
             struct.pack("<I", len(checkpoint.tensors))]
    for name, value in checkpoint.tensors.items():
        encoded = name.encode("utf-8")
        value = np.asarray(value)
        parts.append(struct.pack("<I", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<I{value.ndim}I", value.ndim, *value.shape))
        parts.append(value.astype("<f4").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class _Reader:
    """带边界检查的顺序读取器"""

    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, size: int) -> bytes:
        if size < 0 or self.offset + size > len(self.data):
            raise CorruptFile("检查点被截断")
        chunk = self.data[self.offset:self.offset + size]
        self.offset += size
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]


def decode_checkpoint(data: bytes) -> Checkpoint:
    """
    解析检查点字节

    Raises:
        CorruptFile: 魔数错误、截断、校验和不符或内容无法解析
        VersionMismatch: 格式版本不被支持
    """
    if len(data) < 12 or data[:4] != MAGIC:
        raise CorruptFile("不是 StrideSense 检查点（魔数错误）")
    version = struct.unpack("<I", data[4:8])[0]
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"检查点版本 {version} 不受支持（当前 {FORMAT_VERSION}）")
    body, trailer = data[:-4], data[-4:]
    if zlib.crc32(body) != struct.unpack("<I", trailer)[0]:
        raise CorruptFile("检查点校验和不符")

    reader = _Reader(body)
    reader.take(8)
    try:
        header = json.loads(reader.take(reader.u32()).decode("utf-8"))
        model_config = ModelConfig(**header["model_config"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
        raise CorruptFile(f"检查点头无法解析: {e}") from e

    tensors: dict[str, np.ndarray] = {}
    for _ in range(reader.u32()):
        name = reader.take(reader.u32()).decode("utf-8", errors="strict")
        rank = reader.u32()
        shape = struct.unpack(f"<{rank}I", reader.take(4 * rank))
        count = int(np.prod(shape, dtype=np.int64))
        tensors[name] = np.frombuffer(reader.take(4 * count), dtype="<f4").reshape(shape).astype(np.float32)
    if reader.offset != len(body):
        raise CorruptFile("检查点末尾有多余字节")

    return Checkpoint(model_config=model_config, tensors=tensors,
                      metadata=header.get("metadata") or {}, format_version=version)


def save_checkpoint(model: Cnn14Regressor, path: str | Path, metadata: Optional[dict] = None) -> Checkpoint:
    checkpoint = checkpoint_from_model(model, metadata)
    write_checkpoint(checkpoint, path)
    return checkpoint


def write_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(checkpoint))
    except OSError as e:
        raise ArtifactIOError(f"写出检查点失败: {path}: {e}") from e
    logger.info(f"检查点已保存: {path} ({len(checkpoint.tensors)} 个张量)")


def read_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ArtifactIOError(f"读取检查点失败: {path}: {e}") from e
    return decode_checkpoint(data)


def model_from_checkpoint(checkpoint: Checkpoint, config: Optional[ModelConfig] = None) -> Cnn14Regressor:
    """
    用检查点中的张量构建模型

    Args:
        checkpoint: 检查点
        config: 目标结构（默认使用检查点自带的配置）

    Returns:
        载入权重后的模型

    Raises:
        ShapeMismatch: 目标结构与检查点张量不一致
    """
    model = Cnn14Regressor(config or checkpoint.model_config)
    tensors = dict(checkpoint.tensors)
    mean = tensors.pop(INPUT_MEAN_NAME, None)
    std = tensors.pop(INPUT_STD_NAME, None)
    model.load_state_dict(tensors, strict=True)
    if mean is not None and std is not None:
        model.set_input_stats(mean, std)
    return model


def load_checkpoint(path: str | Path, config: Optional[ModelConfig] = None) -> Cnn14Regressor:
    return model_from_checkpoint(read_checkpoint(path), config)


def replace_head(checkpoint: Checkpoint, seed: int = 0,
                 config: Optional[ModelConfig] = None) -> Cnn14Regressor:
    """
    用预训练检查点构建单输出回归模型

    除输出层外的全部参数与统计量按原样拷贝，输出层按种子重新初始化（He 均匀，偏置为 0），
    输出维度固定为 1。

    Args:
        checkpoint: 预训练检查点（输出维度任意）
        seed: 输出层初始化种子
        config: 目标主干结构（默认沿用检查点的结构）

    Returns:
        新模型

    Raises:
        IncompatibleBackbone: 主干参数缺失或形状不一致
    """
    base = config or checkpoint.model_config
    target = base.model_copy(update={"output_dim": 1})
    model = Cnn14Regressor(target)

    backbone = {
        name: value for name, value in checkpoint.tensors.items()
        if name not in HEAD_NAMES and name not in (INPUT_MEAN_NAME, INPUT_STD_NAME)
    }
    expected = {name for name, _ in model.named_parameters()} | {name for name, _ in model.named_buffers()}
    expected -= set(HEAD_NAMES)
    missing = sorted(expected - set(backbone))
    if missing:
        raise IncompatibleBackbone(f"检查点缺少主干参数: {missing[:5]}")
    try:
        model.load_state_dict(backbone, strict=False)
    except ShapeMismatch as e:
        raise IncompatibleBackbone(f"主干形状不兼容: {e}") from e

    model.fc_out.reset_parameters(np.random.default_rng(seed))

    mean = checkpoint.tensors.get(INPUT_MEAN_NAME)
    std = checkpoint.tensors.get(INPUT_STD_NAME)
    if mean is not None and std is not None:
        model.set_input_stats(mean, std)
    logger.info(f"已替换输出层: {checkpoint.model_config.output_dim} → 1")
    return model
