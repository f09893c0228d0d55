"""
张量与反向传播

每个张量记录产生它的输入张量以及一个把梯度推回输入的闭包，
backward() 按拓扑序逆序调用这些闭包。
"""

from typing import Callable, Iterable, Optional

import numpy as np

from errors import NonScalarLoss, ShapeMismatch


DEFAULT_DTYPE = np.float32


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """把广播后的梯度求和回原形状"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    稠密张量

    data 为行优先 numpy 数组（默认 float32），grad 与 data 同形状。
    """

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _children: Iterable["Tensor"] = (),
        dtype=None,
    ):
        if dtype is None and isinstance(data, (np.ndarray, np.generic)) and data.dtype.kind == "f":
            self.data = np.asarray(data)
        else:
            self.data = np.asarray(data, dtype=dtype or DEFAULT_DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._prev = tuple(_children)
        self._backward: Callable[[], None] = lambda: None

    # ---- 基本属性 ----

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.dtype}, requires_grad={self.requires_grad})"

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    # ---- 计算图 ----

    @staticmethod
    def make(data: np.ndarray, children: tuple["Tensor", ...]) -> "Tensor":
        """创建运算结果张量，只要有一个输入需要梯度，结果就需要梯度"""
        return Tensor(data, requires_grad=any(c.requires_grad for c in children), _children=children)

    def accumulate(self, grad: np.ndarray) -> None:
        """累加梯度（只对需要梯度的张量生效）"""
        if not self.requires_grad:
            return
        grad = grad.astype(self.data.dtype, copy=False)
        if grad.shape != self.data.shape:
            raise ShapeMismatch(f"梯度形状 {grad.shape} 与数据形状 {self.data.shape} 不一致")
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad = self.grad + grad

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """
        反向传播

        Args:
            grad: 输出梯度；标量张量可省略（默认为 1）
        """
        if grad is None:
            if self.data.size != 1:
                raise NonScalarLoss(f"非标量张量 {self.shape} 需要显式给出输出梯度")
            grad = np.ones_like(self.data)

        # 迭代式拓扑排序，避免深图递归过深
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in visited:
                    stack.append((child, False))

        self.accumulate(np.asarray(grad))
        for node in reversed(topo):
            if node.grad is not None:
                node._backward()

    # ---- 逐元素运算 ----

    def lift(self, value) -> "Tensor":
        """把常数转换为与自身同 dtype 的张量"""
        return value if isinstance(value, Tensor) else Tensor(np.asarray(value, dtype=self.dtype))

    def __add__(self, other) -> "Tensor":
        other = self.lift(other)
        out = Tensor.make(self.data + other.data.astype(self.dtype, copy=False), (self, other))

        def _backward():
            self.accumulate(_unbroadcast(out.grad, self.shape))
            other.accumulate(_unbroadcast(out.grad, other.shape))

        out._backward = _backward
        return out

    def __radd__(self, other) -> "Tensor":
        return self + other

    def __neg__(self) -> "Tensor":
        out = Tensor.make(-self.data, (self,))

        def _backward():
            self.accumulate(-out.grad)

        out._backward = _backward
        return out

    def __sub__(self, other) -> "Tensor":
        return self + (-self.lift(other))

    def __rsub__(self, other) -> "Tensor":
        return self.lift(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = self.lift(other)
        out = Tensor.make(self.data * other.data.astype(self.dtype, copy=False), (self, other))

        def _backward():
            self.accumulate(_unbroadcast(out.grad * other.data, self.shape))
            other.accumulate(_unbroadcast(out.grad * self.data, other.shape))

        out._backward = _backward
        return out

    def __rmul__(self, other) -> "Tensor":
        return self * other

    def __truediv__(self, other) -> "Tensor":
        other = self.lift(other)
        out = Tensor.make(self.data / other.data.astype(self.dtype, copy=False), (self, other))

        def _backward():
            self.accumulate(_unbroadcast(out.grad / other.data, self.shape))
            other.accumulate(_unbroadcast(-out.grad * self.data / other.data ** 2, other.shape))

        out._backward = _backward
        return out

    def __rtruediv__(self, other) -> "Tensor":
        return self.lift(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        out = Tensor.make(self.data ** exponent, (self,))

        def _backward():
            self.accumulate(out.grad * exponent * self.data ** (exponent - 1))

        out._backward = _backward
        return out

    # ---- 形状与归约 ----

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor.make(self.data.reshape(shape), (self,))

        def _backward():
            self.accumulate(out.grad.reshape(self.shape))

        out._backward = _backward
        return out

    def sum(self, axis: Optional[int] = None) -> "Tensor":
        value = self.data.sum(axis=axis, dtype=np.float64).astype(self.dtype)
        out = Tensor.make(value, (self,))

        def _backward():
            grad = out.grad if axis is None else np.expand_dims(out.grad, axis)
            self.accumulate(np.broadcast_to(grad, self.shape))

        out._backward = _backward
        return out

    def mean(self, axis: Optional[int] = None) -> "Tensor":
        count = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) * (1.0 / count)
