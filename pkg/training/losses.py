"""
CCC 损失
"""

import numpy as np

from errors import LengthMismatch, TooShort
from evaluation.metrics import CCC_EPS, ccc
from nn.tensor import Tensor


def ccc_loss(pred: Tensor, target) -> Tensor:
    """
    1 − CCC(pred, target)，对 pred 可微

    统计量按批计算（总体矩），分母带 1e−8。

    Args:
        pred: 预测 (N,)
        target: 原始 RPE 目标 (N,)

    Returns:
        标量损失张量
    """
    target = np.asarray(target).reshape(-1)
    if pred.data.ndim != 1 or pred.shape[0] != target.size:
        raise LengthMismatch(f"预测 {pred.shape} 与目标 ({target.size},) 长度不一致")
    if target.size < 2:
        raise TooShort(f"CCC 损失至少需要 2 个样本，实际 {target.size}")
    y = Tensor(target.astype(pred.dtype))
    mean_x = pred.mean()
    mean_y = y.mean()
    dx = pred - mean_x
    dy = y - mean_y
    cov = (dx * dy).mean()
    var_x = (dx * dx).mean()
    var_y = (dy * dy).mean()
    denominator = var_x + var_y + (mean_x - mean_y) ** 2 + CCC_EPS
    return 1.0 - 2.0 * cov / denominator


__all__ = ["ccc", "ccc_loss"]
