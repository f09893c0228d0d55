"""
回归指标：MAE 与 CCC

训练损失和评估报告共用这里的 ccc。
"""

import numpy as np

from errors import EmptyInput, LengthMismatch, TooShort


CCC_EPS = 1e-8


def _as_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise LengthMismatch(f"长度不一致: {x.size} vs {y.size}")
    return x, y


def mae(preds, targets) -> float:
    """平均绝对误差"""
    preds, targets = _as_pair(preds, targets)
    if preds.size == 0:
        raise EmptyInput("MAE 的输入为空")
    return float(np.mean(np.abs(preds - targets)))


def ccc(x, y) -> float:
    """
    一致性相关系数（Lin's CCC）

    2·cov(x,y) / (var(x) + var(y) + (mean(x) − mean(y))² + 1e−8)，矩为总体矩（除以 n）。
    对 x 与 y 严格对称。

    Args:
        x: 序列
        y: 等长序列（n ≥ 2）

    Returns:
        CCC 值
    """
    x, y = _as_pair(x, y)
    if x.size < 2:
        raise TooShort(f"CCC 至少需要 2 个样本，实际 {x.size}")
    mean_x = x.mean()
    mean_y = y.mean()
    dx = x - mean_x
    dy = y - mean_y
    cov = np.mean(dx * dy)
    denominator = np.mean(dx * dx) + np.mean(dy * dy) + (mean_x - mean_y) ** 2 + CCC_EPS
    return float(2.0 * cov / denominator)


def ccc_or_none(x, y):
    """n < 2 时返回 None（报告中写作 undefined）"""
    if np.asarray(x).size < 2:
        return None
    return ccc(x, y)
