"""
CNN14 回归模型

六个卷积块，每块为 [3×3 卷积 → 批归一化 → ReLU] ×2，之后 2×2 最大池化与 dropout。
前五块池化步长为 2，最后一块步长为 1。
随后在频率轴取平均，在时间轴取 平均 + 最大，再接 全连接 + ReLU + dropout 与输出层。
"""

import logging
from typing import Iterable, Literal

import numpy as np

from config_loader import ModelConfig
from errors import InputTooShort, NotStandardized, ShapeMismatch
from nn import functional as F
from nn.layers import BatchNorm2d, Conv2d, Dropout, Linear, Module
from nn.tensor import DEFAULT_DTYPE, Tensor


logger = logging.getLogger(__name__)

MIN_FRAMES = 64
HEAD_NAMES = ("fc_out.weight", "fc_out.bias")
INPUT_MEAN_NAME = "input_norm.mean"
INPUT_STD_NAME = "input_norm.std"


class ConvBlock(Module):
    """两层卷积 + 池化 + dropout"""

    def __init__(self, in_channels: int, out_channels: int, pool_stride: int, dropout_p: float,
                 rng: np.random.Generator):
        super().__init__()
        self.conv1 = Conv2d(in_channels, out_channels, rng)
        self.bn1 = BatchNorm2d(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, rng)
        self.bn2 = BatchNorm2d(out_channels)
        self.dropout = Dropout(dropout_p)
        self.pool_stride = pool_stride

    def forward(self, x: Tensor) -> Tensor:
        x = F.relu(self.bn1(self.conv1(x)))
        x = F.relu(self.bn2(self.conv2(x)))
        x = F.maxpool2d(x, stride=self.pool_stride)
        return self.dropout(x)


class Cnn14Regressor(Module):
    """
    CNN14 回归器

    输入为 (N, 1, T, n_mels) 的 log-Mel 批，输出为 (N, output_dim)。
    输入标准化统计量（每个 Mel 频带的均值与标准差）属于模型的一部分。
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        super().__init__()
        object.__setattr__(self, "config", config)
        rng = np.random.default_rng(seed)
        channels = config.block_channels
        in_channels = 1
        for index, out_channels in enumerate(channels, start=1):
            stride = 2 if index < len(channels) else 1
            setattr(self, f"block{index}",
                    ConvBlock(in_channels, out_channels, stride, config.dropout_p, rng))
            in_channels = out_channels
        embedding = config.embedding_dim
        self.fc1 = Linear(embedding, embedding, rng)
        self.dropout = Dropout(config.dropout_p)
        self.fc_out = Linear(embedding, config.output_dim, rng)
        object.__setattr__(self, "input_mean", None)
        object.__setattr__(self, "input_std", None)
        self.reseed_dropout(seed)

    @property
    def blocks(self) -> list[ConvBlock]:
        return [getattr(self, f"block{i}") for i in range(1, len(self.config.block_channels) + 1)]

    def reseed_dropout(self, seed: int) -> None:
        """所有 dropout 层共用一个按种子创建的生成器"""
        rng = np.random.default_rng(seed)
        for module in self.modules():
            if isinstance(module, Dropout):
                module.rng = rng

    # ---- 输入标准化 ----

    def set_input_stats(self, mean: np.ndarray, std: np.ndarray) -> None:
        n_mels = self.config.n_mels
        if mean.shape != (n_mels,) or std.shape != (n_mels,):
            raise ShapeMismatch(f"标准化统计量形状应为 ({n_mels},)")
        object.__setattr__(self, "input_mean", np.asarray(mean, dtype=DEFAULT_DTYPE).copy())
        object.__setattr__(self, "input_std", np.asarray(std, dtype=DEFAULT_DTYPE).copy())

    @property
    def is_standardized(self) -> bool:
        return self.input_mean is not None and self.input_std is not None

    def standardize(self, batch: np.ndarray) -> np.ndarray:
        if not self.is_standardized:
            raise NotStandardized("模型没有输入标准化统计量")
        dtype = self.fc_out.weight.dtype
        return ((batch - self.input_mean) / self.input_std).astype(dtype)

    # ---- 前向 ----

    def _check_input(self, batch: np.ndarray) -> None:
        if batch.ndim != 4 or batch.shape[1] != 1 or batch.shape[3] != self.config.n_mels:
            raise ShapeMismatch(
                f"输入形状应为 (N, 1, T, {self.config.n_mels})，实际为 {batch.shape}"
            )
        if batch.shape[2] < MIN_FRAMES:
            raise InputTooShort(f"输入只有 {batch.shape[2]} 帧，至少需要 {MIN_FRAMES} 帧")

    def embed(self, batch: np.ndarray) -> Tensor:
        """
        计算片段嵌入

        Args:
            batch: 原始 log-Mel 批 (N, 1, T, n_mels)

        Returns:
            嵌入张量 (N, C)
        """
        self._check_input(batch)
        x = Tensor(self.standardize(batch))
        for block in self.blocks:
            x = block(x)
        x = F.mean_over(x, axis=3)
        x = F.mean_over(x, axis=2) + F.max_over(x, axis=2)
        return x

    def forward(self, batch: np.ndarray) -> Tensor:
        x = self.embed(batch)
        x = self.dropout(F.relu(self.fc1(x)))
        return self.fc_out(x)


def build_cnn14(config: ModelConfig, seed: int = 0) -> Cnn14Regressor:
    """
    按配置构建随机初始化的模型（卷积与全连接使用 He 均匀初始化，偏置为 0）

    Args:
        config: 模型配置
        seed: 初始化种子

    Returns:
        Cnn14Regressor
    """
    model = Cnn14Regressor(config, seed)
    logger.info(
        f"构建 CNN14: 通道 {config.block_channels}, 参数量 {count_parameters(model):,}"
    )
    return model


def forward(model: Cnn14Regressor, batch: np.ndarray,
            mode: Literal["train", "eval"] = "eval") -> Tensor:
    """
    在指定模式下前向计算

    Returns:
        output_dim 为 1 时为 (N,)，否则为 (N, output_dim)
    """
    model.train(mode == "train")
    out = model(batch)
    if model.config.output_dim == 1:
        out = out.reshape(out.shape[0])
    return out


def count_parameters(model: Module) -> int:
    return sum(p.size for p in model.parameters())


def compute_input_stats(features: Iterable[np.ndarray], n_mels: int) -> tuple[np.ndarray, np.ndarray]:
    """
    逐频带均值与标准差（float64 累加，常数频带的标准差取 1）

    Args:
        features: (T, n_mels) 特征矩阵序列
        n_mels: Mel 频带数

    Returns:
        (mean, std)
    """
    total = np.zeros(n_mels, dtype=np.float64)
    total_sq = np.zeros(n_mels, dtype=np.float64)
    count = 0
    for values in features:
        if values.ndim != 2 or values.shape[1] != n_mels:
            raise ShapeMismatch(f"特征形状应为 (T, {n_mels})，实际为 {values.shape}")
        values = values.astype(np.float64)
        total += values.sum(axis=0)
        total_sq += (values ** 2).sum(axis=0)
        count += values.shape[0]
    if count == 0:
        raise ShapeMismatch("没有可用于统计的特征帧")
    mean = total / count
    var = np.maximum(total_sq / count - mean ** 2, 0.0)
    std = np.sqrt(var)
    std[std < 1e-8] = 1.0
    return mean, std
