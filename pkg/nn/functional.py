"""
CNN14 所需的张量运算

每个函数既计算前向结果，也登记对应的反向闭包。
卷积用 k×k 个偏移切片与 tensordot 累加完成（等价于 im2col 后的矩阵乘法）。
"""

from typing import Optional

import numpy as np

from errors import DegenerateBatch, InputTooSmall, ShapeMismatch
from nn.tensor import Tensor


BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def conv2d(x: Tensor, weight: Tensor, bias: Tensor, padding: int = 1) -> Tensor:
    """
    二维卷积（步长 1，零填充）

    Args:
        x: 输入 (N, C, H, W)
        weight: 卷积核 (O, C, kh, kw)
        bias: 偏置 (O,)
        padding: 四周零填充宽度

    Returns:
        输出 (N, O, H + 2p - kh + 1, W + 2p - kw + 1)
    """
    if x.data.ndim != 4 or weight.data.ndim != 4:
        raise ShapeMismatch(f"conv2d 需要 4 维输入和卷积核: {x.shape}, {weight.shape}")
    n, c, h, w = x.shape
    o, c_w, kh, kw = weight.shape
    if c != c_w:
        raise ShapeMismatch(f"输入通道 {c} 与卷积核通道 {c_w} 不一致")
    if bias.shape != (o,):
        raise ShapeMismatch(f"偏置形状 {bias.shape} 应为 ({o},)")
    ho = h + 2 * padding - kh + 1
    wo = w + 2 * padding - kw + 1
    if ho < 1 or wo < 1:
        raise InputTooSmall(f"conv2d 输入 {h}x{w} 小于卷积核 {kh}x{kw}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    acc = np.zeros((o, n, ho, wo), dtype=x.dtype)
    for i in range(kh):
        for j in range(kw):
            patch = xp[:, :, i:i + ho, j:j + wo]
            acc += np.tensordot(weight.data[:, :, i, j], patch, axes=([1], [1]))
    value = acc.transpose(1, 0, 2, 3) + bias.data[None, :, None, None]
    out = Tensor.make(np.ascontiguousarray(value), (x, weight, bias))

    def _backward():
        g = out.grad
        bias.accumulate(g.sum(axis=(0, 2, 3)))
        dw = np.zeros_like(weight.data) if weight.requires_grad else None
        dxp = np.zeros_like(xp) if x.requires_grad else None
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, :, i:i + ho, j:j + wo]
                if dw is not None:
                    dw[:, :, i, j] = np.tensordot(g, patch, axes=([0, 2, 3], [0, 2, 3]))
                if dxp is not None:
                    contrib = np.tensordot(weight.data[:, :, i, j], g, axes=([0], [1]))
                    dxp[:, :, i:i + ho, j:j + wo] += contrib.transpose(1, 0, 2, 3)
        if dw is not None:
            weight.accumulate(dw)
        if dxp is not None:
            x.accumulate(dxp[:, :, padding:padding + h, padding:padding + w])

    out._backward = _backward
    return out


def batchnorm2d(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    training: bool,
    momentum: float = BN_MOMENTUM,
    eps: float = BN_EPS,
) -> Tensor:
    """
    按通道的批归一化

    训练模式使用当前批的 (N, H, W) 统计量，并原地更新 running_mean / running_var
    （滑动平均，方差取无偏估计）；推理模式使用 running 统计量。
    统计量以 float64 计算。

    Args:
        x: 输入 (N, C, H, W)
        gamma: 缩放 (C,)
        beta: 平移 (C,)
        running_mean: 滑动均值 (C,)，训练模式下原地更新
        running_var: 滑动方差 (C,)，训练模式下原地更新
        training: 是否训练模式

    Returns:
        与输入同形状的张量
    """
    if x.data.ndim != 4:
        raise ShapeMismatch(f"batchnorm2d 需要 4 维输入: {x.shape}")
    n, c, h, w = x.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ShapeMismatch(f"批归一化参数形状应为 ({c},)")

    axes = (0, 2, 3)
    count = n * h * w
    if training:
        if count <= 1:
            raise DegenerateBatch(f"训练模式批归一化每通道只有 {count} 个样本")
        mean = x.data.mean(axis=axes, dtype=np.float64)
        var = x.data.var(axis=axes, dtype=np.float64)
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * var * count / (count - 1)
    else:
        mean = running_mean.astype(np.float64)
        var = running_var.astype(np.float64)

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mean[None, :, None, None]) * inv_std[None, :, None, None]
    value = gamma.data.astype(np.float64)[None, :, None, None] * xhat + beta.data[None, :, None, None]
    out = Tensor.make(value.astype(x.dtype), (x, gamma, beta))

    def _backward():
        g = out.grad.astype(np.float64)
        gamma.accumulate((g * xhat).sum(axis=axes))
        beta.accumulate(g.sum(axis=axes))
        if not x.requires_grad:
            return
        dxhat = g * gamma.data.astype(np.float64)[None, :, None, None]
        scale = inv_std[None, :, None, None]
        if training:
            sum_dxhat = dxhat.sum(axis=axes, keepdims=True)
            sum_dxhat_xhat = (dxhat * xhat).sum(axis=axes, keepdims=True)
            dx = scale / count * (count * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)
        else:
            dx = dxhat * scale
        x.accumulate(dx)

    out._backward = _backward
    return out


def _pool_views(data: np.ndarray, stride: int, ho: int, wo: int) -> list[np.ndarray]:
    """2×2 窗口内四个位置的切片，按行优先顺序排列"""
    views = []
    for a in range(2):
        for b in range(2):
            views.append(data[:, :, a:a + stride * (ho - 1) + 1:stride, b:b + stride * (wo - 1) + 1:stride])
    return views


def maxpool2d(x: Tensor, stride: int = 2) -> Tensor:
    """
    2×2 最大池化

    stride=2 时输出为 floor(H/2)×floor(W/2)；stride=1 时为 (H-1)×(W-1)。
    窗口内并列最大值取行优先顺序的第一个。

    Args:
        x: 输入 (N, C, H, W)
        stride: 步长（1 或 2）

    Returns:
        池化后的张量
    """
    if x.data.ndim != 4:
        raise ShapeMismatch(f"maxpool2d 需要 4 维输入: {x.shape}")
    if stride not in (1, 2):
        raise ShapeMismatch(f"不支持的池化步长: {stride}")
    _, _, h, w = x.shape
    if h < 2 or w < 2:
        raise InputTooSmall(f"池化输入 {h}x{w} 小于 2x2 窗口")
    ho = (h - 2) // stride + 1
    wo = (w - 2) // stride + 1

    stacked = np.stack(_pool_views(x.data, stride, ho, wo), axis=-1)
    index = stacked.argmax(axis=-1)
    value = np.take_along_axis(stacked, index[..., None], axis=-1)[..., 0]
    out = Tensor.make(value, (x,))

    def _backward():
        dx = np.zeros_like(x.data)
        for k, view in enumerate(_pool_views(dx, stride, ho, wo)):
            view += out.grad * (index == k)
        x.accumulate(dx)

    out._backward = _backward
    return out


def relu(x: Tensor) -> Tensor:
    out = Tensor.make(np.maximum(x.data, 0), (x,))

    def _backward():
        x.accumulate(out.grad * (x.data > 0))

    out._backward = _backward
    return out


def dropout(x: Tensor, p: float, training: bool, rng: Optional[np.random.Generator] = None) -> Tensor:
    """
    反向缩放的 dropout：训练模式下以概率 p 置零并把保留值除以 (1-p)，推理模式为恒等映射
    """
    if not training or p == 0.0:
        return x
    if rng is None:
        raise ValueError("训练模式 dropout 需要随机数生成器")
    mask = ((rng.random(x.shape) >= p) / (1.0 - p)).astype(x.dtype)
    out = Tensor.make(x.data * mask, (x,))

    def _backward():
        x.accumulate(out.grad * mask)

    out._backward = _backward
    return out


def linear(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """
    全连接层 y = x·Wᵀ + b

    Args:
        x: 输入 (N, F)
        weight: 权重 (O, F)
        bias: 偏置 (O,)
    """
    if x.data.ndim != 2 or weight.data.ndim != 2 or x.shape[1] != weight.shape[1]:
        raise ShapeMismatch(f"linear 形状不匹配: 输入 {x.shape}, 权重 {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise ShapeMismatch(f"偏置形状 {bias.shape} 应为 ({weight.shape[0]},)")
    out = Tensor.make(x.data @ weight.data.T + bias.data, (x, weight, bias))

    def _backward():
        g = out.grad
        x.accumulate(g @ weight.data)
        weight.accumulate(g.T @ x.data)
        bias.accumulate(g.sum(axis=0))

    out._backward = _backward
    return out


def mean_over(x: Tensor, axis: int) -> Tensor:
    """沿某一轴取平均（float64 累加）"""
    return x.mean(axis=axis)


def max_over(x: Tensor, axis: int) -> Tensor:
    """沿某一轴取最大值，梯度只回传到第一个最大位置"""
    index = np.expand_dims(x.data.argmax(axis=axis), axis)
    value = np.take_along_axis(x.data, index, axis=axis).squeeze(axis)
    out = Tensor.make(value, (x,))

    def _backward():
        dx = np.zeros_like(x.data)
        np.put_along_axis(dx, index, np.expand_dims(out.grad, axis), axis=axis)
        x.accumulate(dx)

    out._backward = _backward
    return out
