"""Dense float64 tensors with reverse-mode automatic differentiation.

The tape is dynamic: every operation touching a gradient-tracked tensor
records a backward closure on its output. ``Tensor.backward()`` on a
scalar walks the recorded graph once in reverse topological order. It
resets the gradient of every reachable tensor before accumulating, so a
second call recomputes the same gradients instead of doubling them.

Every op validates its output for NaN/Inf and aborts with a
:class:`~windgat.errors.NumericError` naming the op; silent propagation
of non-finite values is forbidden.
"""

from __future__ import annotations

import contextlib

import numpy as np

from .errors import NumericError, ShapeError

_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable tape recording inside the block (used for evaluation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _check_finite(arr: np.ndarray, op: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite value produced by op '{op}'")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to the shape of a broadcast operand."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """N-dimensional float64 array with optional gradient tracking."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn", "_op")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        _check_finite(arr, "tensor")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None
        self._op = "leaf"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple["Tensor", ...], op: str, backward_fn):
        _check_finite(data, op)
        out = Tensor.__new__(Tensor)
        out.data = data
        out.grad = None
        tracked = _grad_enabled and any(p.requires_grad for p in parents)
        out.requires_grad = tracked
        out._parents = parents if tracked else ()
        out._backward_fn = backward_fn if tracked else None
        out._op = op
        return out

    def backward(self) -> None:
        """Populate ``grad`` on every tensor this scalar depends on.

        Gradients of all reachable tensors are reset to zero first, then
        accumulated (sum over all uses). Raises if called on a non-scalar.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")

        order: list[Tensor] = []
        state: dict[int, int] = {}  # id -> 1 while on stack, 2 when finished
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, done = stack.pop()
            if done:
                state[id(node)] = 2
                order.append(node)
                continue
            mark = state.get(id(node))
            if mark == 2:
                continue
            if mark == 1:
                raise NumericError("cycle detected in compute graph")
            state[id(node)] = 1
            stack.append((node, True))
            for p in node._parents:
                if state.get(id(p)) != 2:
                    stack.append((p, False))

        for node in order:
            if node.requires_grad:
                node.grad = np.zeros_like(node.data)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward_fn is not None:
                node._backward_fn(node.grad)

    # -- operator sugar ------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take_row(self, index)

    def reshape(self, shape) -> "Tensor":
        return reshape(self, shape)

    def transpose(self, axes=None) -> "Tensor":
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self) -> "Tensor":
        return mul(tensor_sum(self), 1.0 / self.data.size)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# -- elementwise arithmetic ---------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g, b.data.shape)

    return Tensor._result(data, (a, b), "add", backward)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            a.grad += _unbroadcast(g * b.data, a.data.shape)
        if b.requires_grad:
            b.grad += _unbroadcast(g * a.data, b.data.shape)

    return Tensor._result(data, (a, b), "mul", backward)


def power(a, exponent: float) -> Tensor:
    """Elementwise a**exponent for a constant real exponent."""
    a = _as_tensor(a)
    data = a.data ** exponent

    def backward(g):
        if a.requires_grad:
            a.grad += g * exponent * a.data ** (exponent - 1.0)

    return Tensor._result(data, (a,), "power", backward)


# -- linear algebra -----------------------------------------------------------


def matmul(a, b) -> Tensor:
    """Matrix product. Supports 2-D x 2-D, 2-D x 1-D and 1-D x 2-D."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim not in (1, 2) or b.ndim not in (1, 2) or (a.ndim == 1 and b.ndim == 1):
        raise ShapeError(f"matmul supports matrix/vector operands, got {a.shape} and {b.shape}")
    inner_a = a.shape[-1]
    inner_b = b.shape[0]
    if inner_a != inner_b:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} vs {b.shape}")
    data = a.data @ b.data

    def backward(g):
        if a.ndim == 2 and b.ndim == 2:
            ga, gb = g @ b.data.T, a.data.T @ g
        elif a.ndim == 2 and b.ndim == 1:
            ga, gb = np.outer(g, b.data), a.data.T @ g
        else:  # 1-D @ 2-D
            ga, gb = b.data @ g, np.outer(a.data, g)
        if a.requires_grad:
            a.grad += ga
        if b.requires_grad:
            b.grad += gb

    return Tensor._result(data, (a, b), "matmul", backward)


# -- shape manipulation -------------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(int(s) for s in (shape if isinstance(shape, (tuple, list)) else (shape,)))
    if int(np.prod(shape, dtype=np.int64)) != a.data.size:
        raise ShapeError(f"cannot reshape {a.shape} (size {a.data.size}) to {shape}")
    data = a.data.reshape(shape)
    old_shape = a.data.shape

    def backward(g):
        if a.requires_grad:
            a.grad += g.reshape(old_shape)

    return Tensor._result(data, (a,), "reshape", backward)


def transpose(a, axes=None) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.ndim)))
    data = np.transpose(a.data, axes)
    inverse = tuple(np.argsort(axes))

    def backward(g):
        if a.requires_grad:
            a.grad += np.transpose(g, inverse)

    return Tensor._result(data, (a,), "transpose", backward)


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along ``axis``, preserving operand order."""
    parts = [_as_tensor(t) for t in tensors]
    if not parts:
        raise ShapeError("concat needs at least one tensor")
    try:
        data = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError(f"concat shapes incompatible: {[p.shape for p in parts]}") from exc
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum(sizes)[:-1]

    def backward(g):
        pieces = np.split(g, offsets, axis=axis)
        for p, piece in zip(parts, pieces):
            if p.requires_grad:
                p.grad += piece

    return Tensor._result(data, tuple(parts), "concat", backward)


def take_row(a, index: int) -> Tensor:
    """Select one slice along axis 0 (integer index only)."""
    a = _as_tensor(a)
    if not isinstance(index, (int, np.integer)):
        raise ShapeError(f"only integer row indexing is supported, got {index!r}")
    data = a.data[index].copy()

    def backward(g):
        if a.requires_grad:
            a.grad[index] += g

    return Tensor._result(data, (a,), "take_row", backward)


# -- reductions ---------------------------------------------------------------


def tensor_sum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    data = a.data.sum(axis=axis, keepdims=keepdims)
    in_shape = a.data.shape

    def backward(g):
        if not a.requires_grad:
            return
        if axis is None:
            a.grad += np.broadcast_to(g, in_shape)
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a.grad += np.broadcast_to(gg, in_shape)

    return Tensor._result(data, (a,), "sum", backward)


def _extreme(a, op: str) -> Tensor:
    """Whole-tensor min/max with subgradient at the first occurrence.

    Ties are broken by row-major order (numpy argmin/argmax), which keeps
    the gradient deterministic.
    """
    a = _as_tensor(a)
    if op == "max":
        data = a.data.max()
        flat_idx = int(np.argmax(a.data))
    else:
        data = a.data.min()
        flat_idx = int(np.argmin(a.data))

    def backward(g):
        if a.requires_grad:
            mask = np.zeros_like(a.data)
            mask.flat[flat_idx] = 1.0
            a.grad += g * mask

    return Tensor._result(np.asarray(data), (a,), op, backward)


def tensor_max(a) -> Tensor:
    return _extreme(a, "max")


def tensor_min(a) -> Tensor:
    return _extreme(a, "min")


# -- nonlinearities -----------------------------------------------------------


def leaky_relu(a, slope: float = 0.2) -> Tensor:
    if not 0.0 < slope < 1.0:
        raise ShapeError(f"leaky_relu slope must lie in (0,1), got {slope}")
    a = _as_tensor(a)
    positive = a.data >= 0
    data = np.where(positive, a.data, slope * a.data)

    def backward(g):
        if a.requires_grad:
            a.grad += g * np.where(positive, 1.0, slope)

    return Tensor._result(data, (a,), "leaky_relu", backward)


def elu(a) -> Tensor:
    a = _as_tensor(a)
    positive = a.data >= 0
    with np.errstate(over="ignore"):
        expm1 = np.expm1(np.minimum(a.data, 0.0))
    data = np.where(positive, a.data, expm1)

    def backward(g):
        if a.requires_grad:
            a.grad += g * np.where(positive, 1.0, expm1 + 1.0)

    return Tensor._result(data, (a,), "elu", backward)


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    with np.errstate(over="ignore"):
        data = np.where(
            a.data >= 0,
            1.0 / (1.0 + np.exp(-np.maximum(a.data, 0.0))),
            np.exp(np.minimum(a.data, 0.0)) / (1.0 + np.exp(np.minimum(a.data, 0.0))),
        )

    def backward(g):
        if a.requires_grad:
            a.grad += g * data * (1.0 - data)

    return Tensor._result(data, (a,), "sigmoid", backward)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    data = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            a.grad += g * (1.0 - data * data)

    return Tensor._result(data, (a,), "tanh", backward)


def softmax(a, axis: int) -> Tensor:
    """Exponential normalization along ``axis``, stabilized by max-subtraction.

    Every slice along ``axis`` is strictly positive and sums to one.
    """
    a = _as_tensor(a)
    if not -a.ndim <= axis < a.ndim:
        raise ShapeError(f"softmax axis {axis} out of range for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    exp = np.exp(shifted)
    data = exp / exp.sum(axis=axis, keepdims=True)

    def backward(g):
        if a.requires_grad:
            inner = (g * data).sum(axis=axis, keepdims=True)
            a.grad += data * (g - inner)

    return Tensor._result(data, (a,), "softmax", backward)
