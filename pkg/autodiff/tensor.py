"""
Dense float64 tensors with reverse-mode automatic differentiation
"""

import threading
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from typing import Any, Callable, Optional, Union

import numpy as np
from scipy import special

from utils.errors import GraphError, ShapeMismatchError

_grad_state = threading.local()


def is_grad_enabled() -> bool:
    """Whether new operations record lineage on this thread"""
    return bool(getattr(_grad_state, "enabled", True))


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording lineage (inference, validation)"""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand shape"""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, dim in enumerate(shape) if dim == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _expand_reduced(
    grad: np.ndarray, shape: tuple[int, ...], axis: Any, keepdims: bool
) -> np.ndarray:
    """Broadcast the gradient of a reduction back over the reduced axes"""
    if axis is None:
        return np.broadcast_to(grad, shape)
    if not keepdims:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        axes = tuple(sorted(a % len(shape) for a in axes))
        for a in axes:
            grad = np.expand_dims(grad, a)
    return np.broadcast_to(grad, shape)


class Tensor:
    """Node of a computation graph holding a float64 array and its gradient"""

    # Make numpy defer mixed ndarray/Tensor arithmetic to the Tensor operators
    __array_ufunc__ = None

    def __init__(self, data: Any, requires_grad: bool = False, _op: str = ""):
        self.data: np.ndarray = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self._backward: Callable[[], None] = lambda: None
        self._prev: tuple[Tensor, ...] = ()
        self._op = _op

    @classmethod
    def parameter(cls, data: Any) -> "Tensor":
        """Trainable leaf owning a private copy of data"""
        return cls(np.array(data, dtype=np.float64, copy=True), requires_grad=True)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeMismatchError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def __len__(self) -> int:
        return int(self.data.shape[0])

    def __repr__(self) -> str:
        op = self._op or "leaf"
        return f"Tensor(shape={self.shape}, op={op}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------ graph

    def _accumulate(self, grad: np.ndarray) -> None:
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.data.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True)
        else:
            self.grad = self.grad + grad

    @staticmethod
    def _result(data: np.ndarray, parents: tuple["Tensor", ...], op: str) -> "Tensor":
        requires_grad = is_grad_enabled() and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=requires_grad, _op=op)
        if requires_grad:
            out._prev = tuple(dict.fromkeys(p for p in parents if p.requires_grad))
        return out

    def _topological_order(self) -> list["Tensor"]:
        order: list[Tensor] = []
        marks: dict[int, int] = {}  # 1 on the current path, 2 finished
        stack: list[tuple[Tensor, int]] = [(self, 0)]
        while stack:
            node, idx = stack.pop()
            if idx == 0:
                marks[id(node)] = 1
            if idx < len(node._prev):
                stack.append((node, idx + 1))
                child = node._prev[idx]
                mark = marks.get(id(child))
                if mark == 1:
                    raise GraphError("Computation graph contains a cycle")
                if mark is None:
                    stack.append((child, 0))
            else:
                marks[id(node)] = 2
                order.append(node)
        return order

    def backward(self) -> None:
        """Fill .grad of every node reachable from this scalar root"""
        if self.data.size != 1:
            raise GraphError(f"backward() needs a scalar root, got shape {self.shape}")
        topo = self._topological_order()
        for node in topo:
            node.grad = None
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            node._backward()

    # ------------------------------------------------------------ arithmetic

    def __add__(self, other: "ArrayLike") -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data + other.data, (self, other), "add")

        def _backward() -> None:
            if self.requires_grad:
                self._accumulate(out.grad)
            if other.requires_grad:
                other._accumulate(out.grad)

        out._backward = _backward
        return out

    def __radd__(self, other: "ArrayLike") -> "Tensor":
        return as_tensor(other) + self

    def __sub__(self, other: "ArrayLike") -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data - other.data, (self, other), "sub")

        def _backward() -> None:
            if self.requires_grad:
                self._accumulate(out.grad)
            if other.requires_grad:
                other._accumulate(-out.grad)

        out._backward = _backward
        return out

    def __rsub__(self, other: "ArrayLike") -> "Tensor":
        return as_tensor(other) - self

    def __mul__(self, other: "ArrayLike") -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data * other.data, (self, other), "mul")

        def _backward() -> None:
            if self.requires_grad:
                self._accumulate(out.grad * other.data)
            if other.requires_grad:
                other._accumulate(out.grad * self.data)

        out._backward = _backward
        return out

    def __rmul__(self, other: "ArrayLike") -> "Tensor":
        return as_tensor(other) * self

    def __truediv__(self, other: "ArrayLike") -> "Tensor":
        other = as_tensor(other)
        out = Tensor._result(self.data / other.data, (self, other), "div")

        def _backward() -> None:
            if self.requires_grad:
                self._accumulate(out.grad / other.data)
            if other.requires_grad:
                other._accumulate(-out.grad * self.data / (other.data * other.data))

        out._backward = _backward
        return out

    def __rtruediv__(self, other: "ArrayLike") -> "Tensor":
        return as_tensor(other) / self

    def __neg__(self) -> "Tensor":
        out = Tensor._result(-self.data, (self,), "neg")

        def _backward() -> None:
            self._accumulate(-out.grad)

        out._backward = _backward
        return out

    def __pow__(self, exponent: float) -> "Tensor":
        exponent = float(exponent)
        out = Tensor._result(self.data**exponent, (self,), "pow")

        def _backward() -> None:
            self._accumulate(out.grad * exponent * self.data ** (exponent - 1.0))

        out._backward = _backward
        return out

    def __matmul__(self, other: "ArrayLike") -> "Tensor":
        other = as_tensor(other)
        if self.ndim < 2 or other.ndim < 2:
            raise ShapeMismatchError(f"matmul needs 2-D operands, got {self.shape} @ {other.shape}")
        if self.shape[-1] != other.shape[-2]:
            raise ShapeMismatchError(
                f"matmul inner dimensions differ: {self.shape} @ {other.shape}"
            )
        out = Tensor._result(np.matmul(self.data, other.data), (self, other), "matmul")

        def _backward() -> None:
            if self.requires_grad:
                self._accumulate(np.matmul(out.grad, np.swapaxes(other.data, -1, -2)))
            if other.requires_grad:
                other._accumulate(np.matmul(np.swapaxes(self.data, -1, -2), out.grad))

        out._backward = _backward
        return out

    def square(self) -> "Tensor":
        return self * self

    # --------------------------------------------------------- elementwise

    def exp(self) -> "Tensor":
        out = Tensor._result(np.exp(self.data), (self,), "exp")

        def _backward() -> None:
            self._accumulate(out.grad * out.data)

        out._backward = _backward
        return out

    def log(self) -> "Tensor":
        out = Tensor._result(np.log(self.data), (self,), "log")

        def _backward() -> None:
            self._accumulate(out.grad / self.data)

        out._backward = _backward
        return out

    def relu(self) -> "Tensor":
        out = Tensor._result(np.maximum(self.data, 0.0), (self,), "relu")

        def _backward() -> None:
            self._accumulate(out.grad * (self.data > 0.0))

        out._backward = _backward
        return out

    def tanh(self) -> "Tensor":
        out = Tensor._result(np.tanh(self.data), (self,), "tanh")

        def _backward() -> None:
            self._accumulate(out.grad * (1.0 - out.data * out.data))

        out._backward = _backward
        return out

    def sigmoid(self) -> "Tensor":
        out = Tensor._result(special.expit(self.data), (self,), "sigmoid")

        def _backward() -> None:
            self._accumulate(out.grad * out.data * (1.0 - out.data))

        out._backward = _backward
        return out

    def log_sigmoid(self) -> "Tensor":
        """log σ(x) without overflow for large |x|"""
        out = Tensor._result(special.log_expit(self.data), (self,), "log_sigmoid")

        def _backward() -> None:
            self._accumulate(out.grad * special.expit(-self.data))

        out._backward = _backward
        return out

    def softplus(self) -> "Tensor":
        out = Tensor._result(np.logaddexp(0.0, self.data), (self,), "softplus")

        def _backward() -> None:
            self._accumulate(out.grad * special.expit(self.data))

        out._backward = _backward
        return out

    def clip(self, low: float, high: float) -> "Tensor":
        out = Tensor._result(np.clip(self.data, low, high), (self,), "clip")

        def _backward() -> None:
            inside = (self.data > low) & (self.data < high)
            self._accumulate(out.grad * inside)

        out._backward = _backward
        return out

    # ------------------------------------------------------------ reductions

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        out = Tensor._result(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum")

        def _backward() -> None:
            self._accumulate(_expand_reduced(out.grad, self.data.shape, axis, keepdims))

        out._backward = _backward
        return out

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        if axis is None:
            count = self.data.size
        else:
            count = int(np.prod([self.data.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) / float(count)

    def logsumexp(self, axis: int = -1, keepdims: bool = False) -> "Tensor":
        kept = special.logsumexp(self.data, axis=axis, keepdims=True)
        data = kept if keepdims else np.squeeze(kept, axis=axis)
        out = Tensor._result(data, (self,), "logsumexp")

        def _backward() -> None:
            grad = _expand_reduced(out.grad, self.data.shape, axis, keepdims)
            self._accumulate(grad * np.exp(self.data - kept))

        out._backward = _backward
        return out

    def log_softmax(self, axis: int = -1) -> "Tensor":
        return self - self.logsumexp(axis=axis, keepdims=True)

    def softmax(self, axis: int = -1) -> "Tensor":
        return self.log_softmax(axis=axis).exp()

    # ---------------------------------------------------------------- shape

    def reshape(self, *shape: int) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        out = Tensor._result(self.data.reshape(shape), (self,), "reshape")

        def _backward() -> None:
            self._accumulate(out.grad.reshape(self.data.shape))

        out._backward = _backward
        return out

    def transpose(self, axes: Optional[Sequence[int]] = None) -> "Tensor":
        out = Tensor._result(np.transpose(self.data, axes), (self,), "transpose")
        inverse = None if axes is None else np.argsort(axes)

        def _backward() -> None:
            self._accumulate(np.transpose(out.grad, inverse))

        out._backward = _backward
        return out

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, index: Any) -> "Tensor":
        out = Tensor._result(self.data[index], (self,), "getitem")

        def _backward() -> None:
            full = np.zeros_like(self.data)
            np.add.at(full, index, out.grad)
            self._accumulate(full)

        out._backward = _backward
        return out


ArrayLike = Union[Tensor, np.ndarray, float, int]


def as_tensor(value: ArrayLike) -> Tensor:
    """Wrap constants; tensors pass through"""
    return value if isinstance(value, Tensor) else Tensor(value)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along an existing axis"""
    parts = [as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeMismatchError("concat needs at least one tensor")
    out = Tensor._result(np.concatenate([p.data for p in parts], axis=axis), tuple(parts), "concat")
    sizes = np.cumsum([p.data.shape[axis] for p in parts])[:-1]

    def _backward() -> None:
        for part, grad in zip(parts, np.split(out.grad, sizes, axis=axis)):
            if part.requires_grad:
                part._accumulate(grad)

    out._backward = _backward
    return out


def where(condition: np.ndarray, a: ArrayLike, b: ArrayLike) -> Tensor:
    """Elementwise select with a constant condition"""
    a, b = as_tensor(a), as_tensor(b)
    cond = np.asarray(condition, dtype=bool)
    out = Tensor._result(np.where(cond, a.data, b.data), (a, b), "where")

    def _backward() -> None:
        if a.requires_grad:
            a._accumulate(np.where(cond, out.grad, 0.0))
        if b.requires_grad:
            b._accumulate(np.where(cond, 0.0, out.grad))

    out._backward = _backward
    return out
