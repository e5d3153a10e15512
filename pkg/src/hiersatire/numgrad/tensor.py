"""Dense float64 tensors with a reverse-mode tape.

Operations executed while a :class:`Tape` is active (``with Tape():``) and
touching at least one tensor that requires gradients are recorded; calling
:func:`backward` on a scalar result walks the records once, newest first,
and accumulates into leaf tensors (parameters) with ``+=``.
"""
from __future__ import annotations

import contextvars
from typing import Callable, Sequence

import numpy as np

_ACTIVE = contextvars.ContextVar("numgrad_tape", default=None)


class ShapeError(ValueError):
    pass


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "tape", "_leaf", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.tape = None
        self._leaf = True
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)


class Parameter(Tensor):
    """A named learnable tensor whose gradient buffer always exists."""

    __slots__ = ("row_sparse", "_rows")

    def __init__(self, name: str, value, row_sparse: bool = False):
        super().__init__(np.array(value, dtype=np.float64), requires_grad=True, name=name)
        self.grad = np.zeros_like(self.data)
        self.row_sparse = row_sparse
        self._rows: list[np.ndarray] = []

    @property
    def value(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        if self.row_sparse and self._rows:
            rows = np.unique(np.concatenate(self._rows))
            self.grad[rows] = 0.0
        else:
            self.grad.fill(0.0)
        self._rows.clear()

    def touched_rows(self) -> np.ndarray | None:
        if not self._rows:
            return None
        return np.unique(np.concatenate(self._rows))


class _RowGrad:
    """Gradient of an embedding table given as (row indices, row values)."""

    __slots__ = ("index", "values", "shape")

    def __init__(self, index, values, shape):
        self.index, self.values, self.shape = index, values, shape

    def dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        np.add.at(out, self.index, self.values)
        return out


class Tape:
    """Ordered record of executed operations, consumed by :meth:`backward`."""

    def __init__(self):
        self.records: list[tuple[Tensor, tuple, Callable]] = []
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE.set(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE.reset(self._token)
        self._token = None
        return False

    def __len__(self):
        return len(self.records)

    def clear(self) -> None:
        self.records.clear()

    def backward(self, loss: Tensor) -> None:
        if loss.tape is not self or not self.records:
            raise RuntimeError("backward called without a recorded forward pass")
        if loss.data.size != 1:
            raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads = {id(loss): np.ones_like(loss.data)}
        for out, inputs, fn in reversed(self.records):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            for inp, gi in zip(inputs, fn(g)):
                if gi is None or not inp.requires_grad:
                    continue
                if inp._leaf:
                    _accumulate_leaf(inp, gi)
                elif isinstance(gi, _RowGrad):
                    prev = grads.get(id(inp))
                    dense = gi.dense()
                    grads[id(inp)] = dense if prev is None else prev + dense
                else:
                    prev = grads.get(id(inp))
                    grads[id(inp)] = gi if prev is None else prev + gi
        self.records.clear()


def _accumulate_leaf(t: Tensor, g) -> None:
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    if isinstance(g, _RowGrad):
        np.add.at(t.grad, g.index, g.values)
        if isinstance(t, Parameter):
            t._rows.append(np.asarray(g.index).ravel())
    else:
        t.grad += g
        if isinstance(t, Parameter) and t.row_sparse:
            t._rows.append(np.arange(t.data.shape[0]))


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf, then clear the tape."""
    if loss.tape is None:
        raise RuntimeError("backward called without a recorded forward pass")
    loss.tape.backward(loss)


def active_tape() -> Tape | None:
    return _ACTIVE.get()


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data: np.ndarray, inputs: Sequence[Tensor], backward_fn: Callable) -> Tensor:
    out = Tensor(data)
    tape = _ACTIVE.get()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._leaf = False
        out.tape = tape
        tape.records.append((out, tuple(inputs), backward_fn))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor, op: str) -> tuple:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}") from None


# -- elementwise ---------------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")
    sa, sb = a.shape, b.shape
    return _make(a.data + b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")
    sa, sb = a.shape, b.shape
    return _make(a.data - b.data, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(-g, sb)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")
    ad, bd = a.data, b.data
    return _make(ad * bd, (a, b),
                 lambda g: (_unbroadcast(g * bd, ad.shape), _unbroadcast(g * ad, bd.shape)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form never overflows.
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    s = _sigmoid(x.data)
    return _make(s, (x,), lambda g: (g * s * (1.0 - s),))


def tanh(x) -> Tensor:
    x = as_tensor(x)
    y = np.tanh(x.data)
    return _make(y, (x,), lambda g: (g * (1.0 - y * y),))


def softmax(x, mask=None) -> Tensor:
    """Softmax over the last axis; entries where ``mask`` is false get exactly 0."""
    x = as_tensor(x)
    z = x.data
    if mask is None:
        shifted = z - z.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        if not mask.any(axis=-1).all():
            raise ValueError("softmax mask leaves a row with no entries")
        top = np.where(mask, z, -np.inf).max(axis=-1, keepdims=True)
        e = np.where(mask, np.exp(np.where(mask, z - top, 0.0)), 0.0)
    s = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return _make(s, (x,), bw)


def dropout(x, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout; the identity when not training or ``p == 0``."""
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    rng = rng if rng is not None else np.random.default_rng()
    keep = (rng.random(x.shape) >= p) / (1.0 - p)
    return _make(x.data * keep, (x,), lambda g: (g * keep,))


# -- shape / indexing ----------------------------------------------------------

def matmul(a, b) -> Tensor:
    """``a @ b`` for 1-D/2-D ``b``; ``a`` may carry leading batch axes."""
    a, b = as_tensor(a), as_tensor(b)
    ad, bd = a.data, b.data
    if bd.ndim not in (1, 2) or ad.ndim < 1 or ad.shape[-1] != bd.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} and {bd.shape}")
    out = ad @ bd

    def bw(g):
        if bd.ndim == 1:
            ga = np.multiply.outer(g, bd) if ad.ndim > 1 else g * bd
            gb = np.tensordot(ad, g, axes=(tuple(range(ad.ndim - 1)), tuple(range(g.ndim))))
        else:
            ga = g @ bd.T
            gb = (np.outer(ad, g) if ad.ndim == 1
                  else ad.reshape(-1, ad.shape[-1]).T @ g.reshape(-1, bd.shape[1]))
        return ga, gb

    return _make(out, (a, b), bw)


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError:
        raise ShapeError("concat: incompatible shapes " + ", ".join(str(t.shape) for t in ts)) from None
    sizes = np.cumsum([t.shape[axis] for t in ts])[:-1]
    return _make(out, ts, lambda g: tuple(np.split(g, sizes, axis=axis)))


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in ts], axis=axis)
    n = len(ts)
    return _make(out, ts, lambda g: tuple(np.take(g, i, axis=axis) for i in range(n)))


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    old = x.shape
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(old),))


def getitem(x, key) -> Tensor:
    x = as_tensor(x)
    shape = x.shape

    def bw(g):
        gx = np.zeros(shape)
        np.add.at(gx, key, g)
        return (gx,)

    return _make(x.data[key], (x,), bw)


def total(x) -> Tensor:
    """Sum of all entries (scalar)."""
    x = as_tensor(x)
    shape = x.shape
    return _make(np.asarray(x.data.sum()), (x,), lambda g: (np.full(shape, float(g)),))


def max_over_time(x, axis: int = 0) -> Tensor:
    """Max pooling along ``axis``; ties send the gradient to the first maximum."""
    x = as_tensor(x)
    idx = np.expand_dims(np.argmax(x.data, axis=axis), axis)
    out = np.take_along_axis(x.data, idx, axis=axis).squeeze(axis)
    shape = x.shape

    def bw(g):
        gx = np.zeros(shape)
        np.put_along_axis(gx, idx, np.expand_dims(g, axis), axis=axis)
        return (gx,)

    return _make(out, (x,), bw)


def embedding_lookup(table, indices) -> Tensor:
    """Gather rows of ``table``; every index (padding included) takes part."""
    table = as_tensor(table)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexError(f"embedding index out of range for table of {table.shape[0]} rows")
    shape = table.shape
    return _make(table.data[idx], (table,), lambda g: (_RowGrad(idx, g, shape),))


# -- loss ----------------------------------------------------------------------

EPS = 1e-12


def binary_cross_entropy(pred, labels) -> Tensor:
    """Mean of ``-(y log p + (1-y) log(1-p))`` with ``p`` clamped to ``[eps, 1-eps]``."""
    pred = as_tensor(pred)
    y = np.asarray(labels, dtype=np.float64)
    if pred.shape != y.shape:
        raise ShapeError(f"binary_cross_entropy: predictions {pred.shape} vs labels {y.shape}")
    if y.size == 0:
        raise ShapeError("binary_cross_entropy: empty batch")
    p = np.clip(pred.data, EPS, 1.0 - EPS)
    inside = (pred.data > EPS) & (pred.data < 1.0 - EPS)
    n = y.size
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))

    def bw(g):
        return (g * np.where(inside, -(y / p - (1.0 - y) / (1.0 - p)) / n, 0.0),)

    return _make(np.asarray(loss), (pred,), bw)
