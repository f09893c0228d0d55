"""
有限差分梯度检查
"""

import logging
from typing import Callable, Optional

import numpy as np

from errors import NonScalarLoss
from nn.tensor import Tensor


logger = logging.getLogger(__name__)


def grad_check(
    fn: Callable[[], Tensor],
    params: list[Tensor],
    eps: float = 1e-3,
    max_coords: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    比较解析梯度与中心差分梯度

    相对误差 = |a - n| / max(|a|, |n|, 1e-8)，返回所有检查坐标上的最大值。
    应使用 float64 参数，fn 每次调用都必须从 params 重新计算损失且不带随机性。

    Args:
        fn: 无参函数，返回标量损失
        params: 待检查的参数张量（requires_grad=True）
        eps: 差分步长
        max_coords: 每个参数最多随机抽查的坐标数（None 表示全部）
        seed: 抽样种子

    Returns:
        最大相对误差
    """
    for p in params:
        p.zero_grad()
    loss = fn()
    if loss.size != 1:
        raise NonScalarLoss(f"梯度检查要求标量损失，实际形状 {loss.shape}")
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, grad in zip(params, analytic):
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        if max_coords is not None and flat.size > max_coords:
            coords = rng.choice(flat.size, size=max_coords, replace=False)
        for idx in coords:
            original = flat[idx]
            flat[idx] = original + eps
            f_plus = float(fn().item())
            flat[idx] = original - eps
            f_minus = float(fn().item())
            flat[idx] = original
            numeric = (f_plus - f_minus) / (2 * eps)
            a = float(grad.reshape(-1)[idx])
            error = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, error)

    logger.debug(f"梯度检查: {len(params)} 个参数, 最大相对误差 {worst:.3e}")
    return worst
