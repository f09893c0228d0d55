"""
StrideSense 张量与神经网络模块（numpy 实现的反向模式自动微分）
"""

from nn.tensor import DEFAULT_DTYPE, Tensor
from nn.layers import BatchNorm2d, Conv2d, Dropout, Linear, Module, kaiming_uniform
from nn.optim import SGD, OptimizerState, sgd_step
from nn.gradcheck import grad_check

__all__ = [
    "DEFAULT_DTYPE",
    "Tensor",
    "BatchNorm2d",
    "Conv2d",
    "Dropout",
    "Linear",
    "Module",
    "kaiming_uniform",
    "SGD",
    "OptimizerState",
    "sgd_step",
    "grad_check",
]
