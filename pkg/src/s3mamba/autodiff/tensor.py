"""Dense float64 tensors with define-by-run reverse-mode differentiation.

Every differentiable operation is a :class:`Function` subclass. ``apply`` runs
the forward pass on the raw NumPy arrays and, when any input requires a
gradient, records the function as the creator of its output. ``backward`` then
walks the recorded graph in exact reverse topological order and accumulates
gradient contributions per tensor, so a parameter used several times receives
the sum of all of them.
"""

from __future__ import annotations

import contextlib
from collections.abc import Iterator
from collections.abc import Sequence
from contextvars import ContextVar
from typing import Any

import numpy as np
from numpy.typing import ArrayLike
from numpy.typing import NDArray
from scipy.special import expit

from ..config.settings import settings
from ..core.exceptions import NonFiniteError
from ..core.exceptions import ShapeError
from ..core.exceptions import ZeroDivisionTensorError

Array = NDArray[np.float64]

_grad_enabled: ContextVar[bool] = ContextVar("grad_enabled", default=True)


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block (per thread / task)."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    """Whether operations currently record a graph."""
    return _grad_enabled.get()


def broadcast_shape(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    """Output shape of an elementwise op under the trailing-dimension rule.

    Either side may broadcast, as in numpy, so reflected operators such as
    ``1.0 - x`` work. :func:`elementwise` additionally pins the result to ``a``.
    """
    try:
        return tuple(np.broadcast_shapes(a, b))
    except ValueError as e:
        raise ShapeError(f"shapes {a} and {b} are not broadcastable") from e


def unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum a broadcast gradient back down to ``shape``."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _check_finite(data: Array, where: str) -> None:
    if not np.all(np.isfinite(data)):
        raise NonFiniteError(f"non-finite value produced by {where}")


class Function:
    """Base class for differentiable operations."""

    def __init__(self, *inputs: Tensor) -> None:
        self.inputs = inputs

    def forward(self, *arrays: Array, **kwargs: Any) -> Array:
        raise NotImplementedError

    def backward(self, grad: Array) -> Sequence[Array | None]:
        raise NotImplementedError

    @property
    def needs_grad(self) -> bool:
        """Whether the output of this call will be part of a recorded graph."""
        return is_grad_enabled() and any(t.requires_grad for t in self.inputs)

    @classmethod
    def apply(cls, *inputs: Tensor, **kwargs: Any) -> Tensor:
        fn = cls(*inputs)
        out = fn.forward(*(t.data for t in inputs), **kwargs)
        if settings.debug:
            _check_finite(out, cls.__name__)
        if fn.needs_grad:
            return Tensor(out, requires_grad=True, _ctx=fn)
        return Tensor(out)


class Tensor:
    """A float64 array plus an optional gradient and creator record."""

    __slots__ = ("_ctx", "data", "grad", "requires_grad")
    __array_ufunc__ = None  # make NumPy defer to the reflected operators

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        _ctx: Function | None = None,
    ) -> None:
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.requires_grad = requires_grad
        self._ctx = _ctx
        if settings.debug and _ctx is None:
            _check_finite(self.data, "tensor construction")

    # ------------------------------------------------------------------ info

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> Array:
        """Copy of the underlying values."""
        return self.data.copy()

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> Tensor:
        """Same values, no graph history."""
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -------------------------------------------------------------- backward

    def _topological_order(self) -> list[Tensor]:
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in reversed(node._ctx.inputs):
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    def backward(self, grad: ArrayLike | None = None) -> None:
        """Accumulate d(self)/d(leaf) into every leaf's ``grad``."""
        if not self.requires_grad:
            raise ShapeError("backward() called on a tensor that does not require grad")
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward() without a seed needs a scalar output")
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=np.float64)
            if seed.shape != self.data.shape:
                raise ShapeError(f"seed shape {seed.shape} != output shape {self.shape}")

        order = self._topological_order()
        pending: dict[int, Array] = {id(self): seed}
        for node in reversed(order):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            if node._ctx is None:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._ctx.inputs, node._ctx.backward(g), strict=True):
                if pg is None or not parent.requires_grad:
                    continue
                pg = unbroadcast(pg, parent.shape)
                key = id(parent)
                pending[key] = pending[key] + pg if key in pending else pg

    def zero_grad(self) -> None:
        self.grad = None

    # ------------------------------------------------------------- operators

    def __add__(self, other: TensorLike) -> Tensor:
        return Add.apply(self, as_tensor(other))

    def __radd__(self, other: TensorLike) -> Tensor:
        return Add.apply(as_tensor(other), self)

    def __sub__(self, other: TensorLike) -> Tensor:
        return Sub.apply(self, as_tensor(other))

    def __rsub__(self, other: TensorLike) -> Tensor:
        return Sub.apply(as_tensor(other), self)

    def __mul__(self, other: TensorLike) -> Tensor:
        return Mul.apply(self, as_tensor(other))

    def __rmul__(self, other: TensorLike) -> Tensor:
        return Mul.apply(as_tensor(other), self)

    def __truediv__(self, other: TensorLike) -> Tensor:
        return Div.apply(self, as_tensor(other))

    def __rtruediv__(self, other: TensorLike) -> Tensor:
        return Div.apply(as_tensor(other), self)

    def __neg__(self) -> Tensor:
        return Neg.apply(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        return matmul(self, other)

    def __getitem__(self, key: Any) -> Tensor:
        return Slice.apply(self, key=key)

    # --------------------------------------------------------- method sugar

    def exp(self) -> Tensor:
        return Exp.apply(self)

    def log(self) -> Tensor:
        return Log.apply(self)

    def sigmoid(self) -> Tensor:
        return Sigmoid.apply(self)

    def silu(self) -> Tensor:
        return Silu.apply(self)

    def softplus(self) -> Tensor:
        return Softplus.apply(self)

    def tanh(self) -> Tensor:
        return Tanh.apply(self)

    def abs(self) -> Tensor:
        return Abs.apply(self)

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        return Sum.apply(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        n = self.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape: int) -> Tensor:
        return Reshape.apply(self, shape=shape)

    def transpose(self, *axes: int) -> Tensor:
        return Transpose.apply(self, axes=axes)


TensorLike = Tensor | float | int | Array


def as_tensor(value: TensorLike) -> Tensor:
    """Wrap constants; tensors pass through untouched."""
    return value if isinstance(value, Tensor) else Tensor(value)


# ---------------------------------------------------------------- elementwise


class Add(Function):
    def forward(self, a: Array, b: Array) -> Array:
        broadcast_shape(a.shape, b.shape)
        return a + b

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return grad, grad


class Sub(Function):
    def forward(self, a: Array, b: Array) -> Array:
        broadcast_shape(a.shape, b.shape)
        return a - b

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return grad, -grad


class Mul(Function):
    def forward(self, a: Array, b: Array) -> Array:
        broadcast_shape(a.shape, b.shape)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return grad * self.b, grad * self.a


class Div(Function):
    def forward(self, a: Array, b: Array) -> Array:
        broadcast_shape(a.shape, b.shape)
        if settings.debug and np.any(b == 0):
            raise ZeroDivisionTensorError("division by zero")
        self.a, self.b = a, b
        with np.errstate(divide="ignore", invalid="ignore"):
            return a / b

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return grad / self.b, -grad * self.a / (self.b * self.b)


class Neg(Function):
    def forward(self, a: Array) -> Array:
        return -a

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (-grad,)


class Exp(Function):
    def forward(self, a: Array) -> Array:
        self.out = np.exp(a)
        return self.out

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad * self.out,)


class Log(Function):
    def forward(self, a: Array) -> Array:
        self.a = a
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log(a)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad / self.a,)


class Sigmoid(Function):
    def forward(self, a: Array) -> Array:
        self.out = expit(a)
        return self.out

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad * self.out * (1.0 - self.out),)


class Silu(Function):
    def forward(self, a: Array) -> Array:
        self.a = a
        self.s = expit(a)
        return a * self.s

    def backward(self, grad: Array) -> Sequence[Array | None]:
        s = self.s
        return (grad * (s + self.a * s * (1.0 - s)),)


class Softplus(Function):
    def forward(self, a: Array) -> Array:
        self.a = a
        return np.logaddexp(0.0, a)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad * expit(self.a),)


class Tanh(Function):
    def forward(self, a: Array) -> Array:
        self.out = np.tanh(a)
        return self.out

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad * (1.0 - self.out * self.out),)


class Abs(Function):
    def forward(self, a: Array) -> Array:
        self.sign = np.sign(a)  # subgradient 0 at 0
        return np.abs(a)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad * self.sign,)


ELEMENTWISE: dict[str, type[Function]] = {
    "add": Add,
    "sub": Sub,
    "mul": Mul,
    "div": Div,
    "neg": Neg,
    "exp": Exp,
    "log": Log,
    "silu": Silu,
    "sigmoid": Sigmoid,
    "softplus": Softplus,
    "tanh": Tanh,
    "abs": Abs,
}

_BINARY = frozenset({"add", "sub", "mul", "div"})


def elementwise(op: str, a: TensorLike, b: TensorLike | None = None) -> Tensor:
    """Apply a named elementwise op; binary ops broadcast ``b`` onto ``a``."""
    if op not in ELEMENTWISE:
        raise ValueError(f"unknown elementwise op {op!r}")
    fn = ELEMENTWISE[op]
    if op in _BINARY:
        if b is None:
            raise ShapeError(f"{op} needs two operands")
        ta, tb = as_tensor(a), as_tensor(b)
        if broadcast_shape(ta.shape, tb.shape) != ta.shape:
            raise ShapeError(f"{op}: shape {tb.shape} does not broadcast onto {ta.shape}")
        return fn.apply(ta, tb)
    if b is not None:
        raise ShapeError(f"{op} takes a single operand")
    return fn.apply(as_tensor(a))


# -------------------------------------------------------- linear algebra etc.


class MatMul(Function):
    def forward(self, a: Array, b: Array) -> Array:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul of {a.shape} and {b.shape}")
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return grad @ self.b.T, self.a.T @ grad


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """[M, K] x [K, N] -> [M, N]."""
    return MatMul.apply(a, b)


class Sum(Function):
    def forward(self, a: Array, axis: int | tuple[int, ...] | None, keepdims: bool) -> Array:
        self.shape = a.shape
        self.axis = axis
        self.keepdims = keepdims
        return np.asarray(a.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad: Array) -> Sequence[Array | None]:
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    def forward(self, a: Array, shape: tuple[int, ...]) -> Array:
        self.shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise ShapeError(f"cannot reshape {a.shape} to {shape}") from e

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad.reshape(self.shape),)


class Transpose(Function):
    def forward(self, a: Array, axes: tuple[int, ...]) -> Array:
        if sorted(axes) != list(range(a.ndim)):
            raise ShapeError(f"axes {axes} do not permute a {a.ndim}-d tensor")
        self.inverse = tuple(np.argsort(axes))
        return a.transpose(axes)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return (grad.transpose(self.inverse),)


class Slice(Function):
    """Basic indexing (ints, slices, Ellipsis)."""

    def forward(self, a: Array, key: Any) -> Array:
        self.shape = a.shape
        self.key = key
        return np.asarray(a[key])

    def backward(self, grad: Array) -> Sequence[Array | None]:
        full = np.zeros(self.shape)
        full[self.key] = grad
        return (full,)


class Take(Function):
    """Gather along one axis with an integer index array."""

    def forward(self, a: Array, index: NDArray[np.intp], axis: int) -> Array:
        self.shape = a.shape
        self.index = index
        self.axis = axis
        return np.take(a, index, axis=axis)

    def backward(self, grad: Array) -> Sequence[Array | None]:
        full = np.zeros(self.shape)
        moved = np.moveaxis(full, self.axis, 0)
        np.add.at(moved, self.index, np.moveaxis(grad, self.axis, 0))
        return (full,)


def take(a: Tensor, index: ArrayLike, axis: int = 0) -> Tensor:
    """``np.take`` with a scatter-add backward."""
    idx = np.asarray(index, dtype=np.intp)
    if idx.ndim != 1:
        raise ShapeError("take expects a 1-d index array")
    return Take.apply(a, index=idx, axis=axis)


class Concat(Function):
    def forward(self, *arrays: Array, axis: int) -> Array:
        self.axis = axis
        self.bounds = np.cumsum([arr.shape[axis] for arr in arrays])[:-1]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError as e:
            raise ShapeError(f"cannot concatenate {[a.shape for a in arrays]}") from e

    def backward(self, grad: Array) -> Sequence[Array | None]:
        return np.split(grad, self.bounds, axis=self.axis)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along an existing axis."""
    if not tensors:
        raise ShapeError("concat of an empty sequence")
    return Concat.apply(*tensors, axis=axis)
