"""Dense float64 tensors with reverse-mode automatic differentiation.

A Tensor wraps a row-major numpy array.  Operations on tensors that require
gradients attach a record (inputs + backward closure + creation sequence
number) to their output.  ``backward()`` assembles the records reachable
from the loss into a GradTape ordered by creation sequence and replays it in
reverse; for a fixed graph the replay order is fixed, so repeated backward
passes are bitwise identical.

Gradients are overwritten, not accumulated across backward() calls: every
pass first zeroes the buffers of all tensors it touches.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager

import numpy as np

from ..errors import NumericError, ShapeError

_seq = itertools.count()
_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference / augmentation)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def grad_enabled() -> bool:
    return _grad_enabled


class _Record:
    """One recorded operation: saved inputs and how to push gradients back."""

    __slots__ = ("inputs", "backward_fn", "seq", "output")

    def __init__(self, inputs, backward_fn, output):
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.output = output
        self.seq = next(_seq)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_record")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.asarray(data, dtype=np.float64)
        if not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._record: _Record | None = None

    # -- introspection -------------------------------------------------

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
        return float(self.data)

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # -- autodiff ------------------------------------------------------

    def backward(self, grad=None) -> "GradTape":
        tape = GradTape.from_output(self)
        tape.run(self, grad)
        return tape

    # -- operators -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __sub__(self, other):
        return add(self, mul(other, -1.0))

    def __rsub__(self, other):
        return add(mul(self, -1.0), other)

    def __neg__(self):
        return mul(self, -1.0)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __pow__(self, exponent):
        return pow_const(self, exponent)

    def __matmul__(self, other):
        return matmul(self, other)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


class GradTape:
    """Ordered record of the operations reaching one output tensor.

    Replaying the records in reverse creation order yields the reverse-mode
    gradient; the order is a pure function of graph construction, so two
    replays over the same graph agree bitwise.
    """

    def __init__(self, records: list[_Record]):
        self.records = records

    @classmethod
    def from_output(cls, out: Tensor) -> "GradTape":
        records: list[_Record] = []
        seen: set[int] = set()
        stack = [out._record] if out._record is not None else []
        while stack:
            rec = stack.pop()
            if rec is None or id(rec) in seen:
                continue
            seen.add(id(rec))
            records.append(rec)
            for t in rec.inputs:
                if t._record is not None and id(t._record) not in seen:
                    stack.append(t._record)
        records.sort(key=lambda r: r.seq)
        return cls(records)

    def run(self, out: Tensor, grad=None) -> None:
        if grad is None:
            grad = np.ones_like(out.data)
        else:
            grad = np.asarray(grad, dtype=np.float64)
            if grad.shape != out.data.shape:
                raise ShapeError(
                    f"seed gradient shape {grad.shape} != output shape {out.data.shape}"
                )
        # Fresh buffers for everything this pass touches.
        for rec in self.records:
            rec.output.grad = np.zeros_like(rec.output.data)
            for t in rec.inputs:
                if t.requires_grad:
                    t.grad = np.zeros_like(t.data)
        if out.requires_grad and out.grad is None:
            out.grad = np.zeros_like(out.data)
        if out.grad is not None:
            out.grad = out.grad + grad
        for rec in reversed(self.records):
            g = rec.output.grad
            if g is None:
                continue
            grads = rec.backward_fn(g)
            for t, gi in zip(rec.inputs, grads):
                if gi is None or not t.requires_grad:
                    continue
                if gi.shape != t.data.shape:
                    raise ShapeError(
                        f"backward produced gradient of shape {gi.shape} "
                        f"for tensor of shape {t.data.shape}"
                    )
                t.grad += gi

    def __len__(self):
        return len(self.records)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def attach(out_data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    """Wrap op output; record it when gradients are both enabled and needed."""
    out = Tensor(out_data)
    if _grad_enabled and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._record = _Record(inputs, backward_fn, out)
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, inverting numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# -- elementwise arithmetic ---------------------------------------------


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data + b.data

    def backward(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return attach(out, (a, b), backward)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data * b.data

    def backward(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return attach(out, (a, b), backward)


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.data.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape),
        )

    return attach(out, (a, b), backward)


def pow_const(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    e = float(exponent)
    out = a.data**e

    def backward(g):
        return (g * e * a.data ** (e - 1.0),)

    return attach(out, (a,), backward)


def exp(a) -> Tensor:
    a = as_tensor(a)
    out = np.exp(a.data)

    def backward(g):
        return (g * out,)

    return attach(out, (a,), backward)


def log(a) -> Tensor:
    a = as_tensor(a)
    out = np.log(a.data)

    def backward(g):
        return (g / a.data,)

    return attach(out, (a,), backward)


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    out = np.sqrt(a.data)

    def backward(g):
        return (g * 0.5 / out,)

    return attach(out, (a,), backward)


# -- linear algebra -------------------------------------------------------


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(
            f"matmul expects 2-D operands, got {a.data.shape} and {b.data.shape}"
        )
    if a.shape[1] != b.shape[0]:
        raise ShapeError(
            f"matmul inner dimensions disagree: {a.data.shape} vs {b.data.shape}"
        )
    out = a.data @ b.data

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return attach(out, (a, b), backward)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose expects a 2-D tensor, got shape {a.data.shape}")
    out = np.ascontiguousarray(a.data.T)

    def backward(g):
        return (np.ascontiguousarray(g.T),)

    return attach(out, (a,), backward)


# -- shape manipulation ---------------------------------------------------


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    out = a.data.reshape(shape)

    def backward(g):
        return (g.reshape(a.data.shape),)

    return attach(out, (a,), backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(as_tensor(t) for t in tensors)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        slicer = [slice(None)] * g.ndim
        grads = []
        for i in range(len(tensors)):
            slicer[axis] = slice(offsets[i], offsets[i + 1])
            grads.append(np.ascontiguousarray(g[tuple(slicer)]))
        return tuple(grads)

    return attach(out, tensors, backward)


def take_rows(a, index) -> Tensor:
    """Gather rows of a 2-D tensor: out[j] = a[index[j]]."""
    a = as_tensor(a)
    idx = np.asarray(index, dtype=np.intp)
    out = a.data[idx]

    def backward(g):
        da = np.zeros_like(a.data)
        np.add.at(da, idx, g)
        return (da,)

    return attach(out, (a,), backward)


# -- reductions -----------------------------------------------------------


def tsum(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, a.data.shape).copy(),)
        gk = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(gk, a.data.shape).copy(),)

    return attach(out, (a,), backward)


def tmean(a, axis=None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.data.size
    else:
        count = a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / count)


def check_finite(t: Tensor, where: str) -> Tensor:
    if not np.all(np.isfinite(t.data)):
        raise NumericError(f"non-finite values in {where}")
    return t
