"""
带 Nesterov 动量与耦合 L2 权重衰减的 SGD
"""

from dataclasses import dataclass, field

import numpy as np

from errors import ShapeMismatch
from nn.tensor import Tensor


@dataclass
class OptimizerState:
    """优化器状态：超参数与每个参数的速度"""
    learning_rate: float
    momentum: float = 0.9
    weight_decay: float = 0.0
    velocity: dict[str, np.ndarray] = field(default_factory=dict)


def sgd_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
) -> dict[str, np.ndarray]:
    """
    单步更新

    对每个参数 p 及其梯度 g：
        g' = g + wd·p
        v  = m·v + g'
        d  = g' + m·v
        p  = p - lr·d

    Args:
        params: 参数名到数组的映射
        grads: 同名梯度（缺失表示该参数本步没有梯度，跳过）
        state: 优化器状态，velocity 原地更新

    Returns:
        更新后的参数（新数组）
    """
    updated = {}
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            updated[name] = p
            continue
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: 梯度形状 {g.shape} 与参数 {p.shape} 不一致")
        g = g + state.weight_decay * p
        v = state.velocity.get(name)
        v = g.copy() if v is None else state.momentum * v + g
        state.velocity[name] = v
        d = g + state.momentum * v
        updated[name] = (p - state.learning_rate * d).astype(p.dtype, copy=False)
    return updated


class SGD:
    """把 sgd_step 应用到一组命名参数张量上"""

    def __init__(self, named_params, learning_rate: float, momentum: float = 0.9,
                 weight_decay: float = 0.0):
        self.params: dict[str, Tensor] = dict(named_params)
        self.state = OptimizerState(learning_rate, momentum, weight_decay)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()

    def step(self) -> None:
        values = {name: p.data for name, p in self.params.items()}
        grads = {name: p.grad for name, p in self.params.items() if p.grad is not None}
        for name, value in sgd_step(values, grads, self.state).items():
            self.params[name].data = value
