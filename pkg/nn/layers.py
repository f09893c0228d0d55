"""
模块与层

Module 通过属性赋值自动登记参数（Tensor）、缓冲区（numpy 数组）和子模块，
参数名按属性路径拼接，例如 ``block1.conv1.weight``。
"""

from typing import Iterator, Optional

import numpy as np

from errors import ShapeMismatch
from nn import functional as F
from nn.tensor import DEFAULT_DTYPE, Tensor


def kaiming_uniform(shape: tuple, fan_in: int, rng: np.random.Generator) -> np.ndarray:
    """He 均匀初始化（fan-in，ReLU 增益）"""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(DEFAULT_DTYPE)


class Module:
    """所有层的基类"""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, name: str, value) -> None:
        if isinstance(value, Tensor):
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    # ---- 遍历 ----

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for name, param in self._params.items():
            yield prefix + name, param
        for name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for name, buf in self._buffers.items():
            yield prefix + name, buf
        for name, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{name}.")

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def modules(self) -> Iterator["Module"]:
        yield self
        for child in self._children.values():
            yield from child.modules()

    # ---- 模式与梯度 ----

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    def to_dtype(self, dtype) -> "Module":
        """把全部参数和缓冲区转换为指定 dtype（梯度检查使用 float64）"""
        for module in self.modules():
            for param in module._params.values():
                param.data = param.data.astype(dtype)
                param.grad = None
            for name, buf in list(module._buffers.items()):
                module.register_buffer(name, buf.astype(dtype))
        return self

    # ---- 状态 ----

    def state_dict(self) -> dict[str, np.ndarray]:
        """参数与缓冲区的拷贝"""
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: dict[str, np.ndarray], strict: bool = True) -> None:
        """
        按名称载入参数与缓冲区

        Args:
            state: 名称到数组的映射
            strict: 为 True 时要求名称集合完全一致
        """
        own = dict(self.named_parameters())
        buffers = {name for name, _ in self.named_buffers()}
        expected = set(own) | buffers
        if strict:
            missing = sorted(expected - set(state))
            unexpected = sorted(set(state) - expected)
            if missing or unexpected:
                raise ShapeMismatch(f"参数名不匹配: 缺少 {missing[:5]}, 多余 {unexpected[:5]}")

        for module_name, module in self._iter_named_modules():
            for name, param in module._params.items():
                key = module_name + name
                if key in state:
                    param.data = self._checked(key, state[key], param.data)
            for name, buf in list(module._buffers.items()):
                key = module_name + name
                if key in state:
                    module.register_buffer(name, self._checked(key, state[key], buf))

    def _iter_named_modules(self, prefix: str = "") -> Iterator[tuple[str, "Module"]]:
        yield prefix, self
        for name, child in self._children.items():
            yield from child._iter_named_modules(f"{prefix}{name}.")

    @staticmethod
    def _checked(name: str, value: np.ndarray, current: np.ndarray) -> np.ndarray:
        if tuple(value.shape) != tuple(current.shape):
            raise ShapeMismatch(f"{name}: 形状 {tuple(value.shape)} 与模型 {current.shape} 不一致")
        return np.array(value, dtype=current.dtype, copy=True)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


class Conv2d(Module):
    """3×3 卷积（步长 1，填充 1）"""

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator,
                 kernel_size: int = 3, padding: int = 1):
        super().__init__()
        fan_in = in_channels * kernel_size * kernel_size
        self.padding = padding
        self.weight = Tensor(
            kaiming_uniform((out_channels, in_channels, kernel_size, kernel_size), fan_in, rng),
            requires_grad=True,
        )
        self.bias = Tensor(np.zeros(out_channels, dtype=DEFAULT_DTYPE), requires_grad=True)

    def forward(self, x: Tensor) -> Tensor:
        return F.conv2d(x, self.weight, self.bias, self.padding)


class BatchNorm2d(Module):
    """按通道批归一化"""

    def __init__(self, channels: int):
        super().__init__()
        self.weight = Tensor(np.ones(channels, dtype=DEFAULT_DTYPE), requires_grad=True)
        self.bias = Tensor(np.zeros(channels, dtype=DEFAULT_DTYPE), requires_grad=True)
        self.register_buffer("running_mean", np.zeros(channels, dtype=DEFAULT_DTYPE))
        self.register_buffer("running_var", np.ones(channels, dtype=DEFAULT_DTYPE))

    def forward(self, x: Tensor) -> Tensor:
        return F.batchnorm2d(
            x, self.weight, self.bias, self.running_mean, self.running_var, self.training
        )


class Linear(Module):
    """全连接层"""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.weight = Tensor(
            kaiming_uniform((out_features, in_features), in_features, rng), requires_grad=True
        )
        self.bias = Tensor(np.zeros(out_features, dtype=DEFAULT_DTYPE), requires_grad=True)

    def reset_parameters(self, rng: np.random.Generator) -> None:
        out_features, in_features = self.weight.shape
        self.weight.data = kaiming_uniform((out_features, in_features), in_features, rng).astype(
            self.weight.dtype
        )
        self.bias.data = np.zeros(out_features, dtype=self.bias.dtype)

    def forward(self, x: Tensor) -> Tensor:
        return F.linear(x, self.weight, self.bias)


class Dropout(Module):
    """反向缩放 dropout，随机数生成器由所属模型提供"""

    def __init__(self, p: float, rng: Optional[np.random.Generator] = None):
        super().__init__()
        self.p = p
        self.rng = rng

    def forward(self, x: Tensor) -> Tensor:
        return F.dropout(x, self.p, self.training, self.rng)
