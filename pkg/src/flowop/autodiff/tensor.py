"""Reverse-mode automatic differentiation over dense numpy arrays.

Every operation records its inputs and a backward rule on the tensor it
produces; creation order doubles as a topological order of the tape, so one
reverse sweep visits each node exactly once and is bit-deterministic for a
fixed graph.  Data is float64 (complex128 for spectral quantities)
throughout.
"""

from __future__ import annotations

import itertools
import math
from contextlib import contextmanager

import numpy as np

from ..errors import ShapeError

_node_counter = itertools.count()
_grad_enabled = True


@contextmanager
def no_grad():
    """Disable tape recording inside the block (inference-only forwards)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(data):
    arr = np.asarray(data)
    if np.iscomplexobj(arr):
        return arr.astype(np.complex128, copy=False)
    return arr.astype(np.float64, copy=False)


class Tensor:
    """Dense n-d array participating in reverse-mode differentiation."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_idx")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = bool(requires_grad) and _grad_enabled
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._idx = next(_node_counter)

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_complex(self):
        return np.iscomplexobj(self.data)

    def item(self) -> float:
        return self.data.item()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # -- graph machinery -----------------------------------------------------

    def _accumulate(self, grad):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def backward(self, grad=None):
        """Reverse sweep seeding d(self)/d(self) = 1 (or ``grad``)."""
        if grad is None:
            if self.size != 1:
                raise ShapeError("backward() without seed requires a scalar output")
            grad = np.ones_like(self.data)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for node in reversed(tape_nodes(self)):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None


def tape_nodes(root: Tensor) -> list[Tensor]:
    """Recorded operations reachable from ``root``, in creation order.

    Creation order is a valid topological order: an op's inputs always exist
    before its output.
    """
    seen = set()
    nodes = []
    stack = [root]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        nodes.append(node)
        stack.extend(node._parents)
    nodes.sort(key=lambda n: n._idx)
    return nodes


def _record(out: Tensor, parents: tuple[Tensor, ...], backward) -> Tensor:
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _cast_like(grad: np.ndarray, ref: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(grad) and not np.iscomplexobj(ref):
        return grad.real
    return grad.astype(ref.dtype, copy=False)


# -- arithmetic ---------------------------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_cast_like(_unbroadcast(g, a.shape), a.data))
        if b.requires_grad:
            b._accumulate(_cast_like(_unbroadcast(g, b.shape), b.data))

    return _record(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data)

    def backward(g):
        # complex factors follow the conjugate rule for real-valued losses
        if a.requires_grad:
            ga = g * np.conj(b.data) if out.is_complex else g * b.data
            a._accumulate(_cast_like(_unbroadcast(ga, a.shape), a.data))
        if b.requires_grad:
            gb = g * np.conj(a.data) if out.is_complex else g * a.data
            b._accumulate(_cast_like(_unbroadcast(gb, b.shape), b.data))

    return _record(out, (a, b), backward)


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_cast_like(_unbroadcast(g, a.shape), a.data))
        if b.requires_grad:
            b._accumulate(_cast_like(_unbroadcast(-g, b.shape), b.data))

    return _record(out, (a, b), backward)


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data)

    def backward(g):
        a._accumulate(-g)

    return _record(out, (a,), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_cast_like(_unbroadcast(g / b.data, a.shape), a.data))
        if b.requires_grad:
            gb = -g * a.data / (b.data * b.data)
            b._accumulate(_cast_like(_unbroadcast(gb, b.shape), b.data))

    return _record(out, (a, b), backward)


def pow_(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data**exponent)

    def backward(g):
        a._accumulate(g * exponent * a.data ** (exponent - 1))

    return _record(out, (a,), backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    root = np.sqrt(a.data)
    out = Tensor(root)

    def backward(g):
        a._accumulate(g / (2.0 * root))

    return _record(out, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    val = np.exp(a.data)
    out = Tensor(val)

    def backward(g):
        a._accumulate(g * val)

    return _record(out, (a,), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)

    def backward(g):
        if a.requires_grad:
            a._accumulate(_cast_like(g @ np.conj(b.data.T), a.data))
        if b.requires_grad:
            b._accumulate(_cast_like(np.conj(a.data.T) @ g, b.data))

    return _record(out, (a, b), backward)


# -- reductions and views ------------------------------------------------------


def sum_(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def backward(g):
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.shape).astype(a.data.dtype))
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.shape).astype(a.data.dtype))

    return _record(out, (a,), backward)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return mul(sum_(a, axis=axis, keepdims=keepdims), 1.0 / count)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.reshape(shape))

    def backward(g):
        a._accumulate(g.reshape(a.shape))

    return _record(out, (a,), backward)


def transpose(a, axes=None) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.transpose(axes))

    def backward(g):
        if axes is None:
            a._accumulate(g.transpose())
        else:
            a._accumulate(g.transpose(np.argsort(axes)))

    return _record(out, (a,), backward)


def concatenate(tensors, axis=0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis))
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _record(out, tuple(tensors), backward)


def getitem(a, key) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data[key])

    def backward(g):
        buf = np.zeros_like(a.data)
        np.add.at(buf, key, g)
        a._accumulate(buf)

    return _record(out, (a,), backward)


# -- activations ---------------------------------------------------------------

_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0.0))

    def backward(g):
        a._accumulate(g * (a.data > 0.0))

    return _record(out, (a,), backward)


def gelu(a) -> Tensor:
    """Tanh-approximation gelu: 0.5x(1 + tanh(c(x + 0.044715x^3)))."""
    a = as_tensor(a)
    x = a.data
    inner = _GELU_C * (x + _GELU_A * x**3)
    t = np.tanh(inner)
    out = Tensor(0.5 * x * (1.0 + t))

    def backward(g):
        sech2 = 1.0 - t * t
        d = 0.5 * (1.0 + t) + 0.5 * x * sech2 * _GELU_C * (1.0 + 3.0 * _GELU_A * x * x)
        a._accumulate(g * d)

    return _record(out, (a,), backward)


def sin(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.sin(a.data))

    def backward(g):
        a._accumulate(g * np.cos(a.data))

    return _record(out, (a,), backward)


_ACTIVATIONS = {"relu": relu, "gelu": gelu, "sin": sin, "identity": lambda t: t}


def activation(x, kind: str) -> Tensor:
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise ShapeError(f"unknown activation kind {kind!r}") from None


# -- complex helpers -------------------------------------------------------------


def abs2(a) -> Tensor:
    """|a|^2 elementwise; real output, defined for real and complex input."""
    a = as_tensor(a)
    out = Tensor((a.data * np.conj(a.data)).real)

    def backward(g):
        a._accumulate(2.0 * g * a.data)

    return _record(out, (a,), backward)


# -- operator sugar ---------------------------------------------------------------

Tensor.__add__ = lambda self, other: add(self, other)
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = lambda self, other: sub(self, other)
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = lambda self, other: mul(self, other)
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__truediv__ = lambda self, other: div(self, other)
Tensor.__rtruediv__ = lambda self, other: div(other, self)
Tensor.__neg__ = lambda self: neg(self)
Tensor.__pow__ = lambda self, e: pow_(self, e)
Tensor.__matmul__ = lambda self, other: matmul(self, other)
Tensor.__getitem__ = lambda self, key: getitem(self, key)
Tensor.sum = lambda self, axis=None, keepdims=False: sum_(self, axis, keepdims)
Tensor.mean = lambda self, axis=None, keepdims=False: mean(self, axis, keepdims)
Tensor.reshape = lambda self, *shape: reshape(self, shape if len(shape) > 1 else shape[0])
Tensor.transpose = lambda self, *axes: transpose(self, axes if axes else None)
