"""GRU cell: a step composed from tape primitives and a fused sequence op."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels as _k
from .tensor import Parameter, Tensor, _make, as_tensor, sigmoid, tanh


@dataclass
class GRUParams:
    """Weights of one GRU direction; matrices act on row vectors (``x @ W``)."""

    Wz: Parameter
    Wr: Parameter
    Wh: Parameter
    Uz: Parameter
    Ur: Parameter
    Uh: Parameter
    bz: Parameter
    br: Parameter
    bh: Parameter

    @property
    def hidden(self) -> int:
        return self.Uz.shape[0]

    @property
    def tensors(self) -> tuple:
        return (self.Wz, self.Wr, self.Wh, self.Uz, self.Ur, self.Uh, self.bz, self.br, self.bh)

    @classmethod
    def create(cls, prefix: str, n_in: int, n_hidden: int, rng: np.random.Generator | None = None):
        from .init import glorot
        rng = rng if rng is not None else np.random.default_rng(0)
        mats = {}
        for g in "zrh":
            mats["W" + g] = Parameter(f"{prefix}.W{g}", glorot(rng, n_in, n_hidden))
        for g in "zrh":
            mats["U" + g] = Parameter(f"{prefix}.U{g}", glorot(rng, n_hidden, n_hidden))
        for g in "zrh":
            mats["b" + g] = Parameter(f"{prefix}.b{g}", np.zeros(n_hidden))
        return cls(**mats)


def gru_step(x, h_prev, p: GRUParams) -> Tensor:
    """One GRU update; the candidate bias sits inside the reset gating."""
    x, h_prev = as_tensor(x), as_tensor(h_prev)
    z = sigmoid(x @ p.Wz + h_prev @ p.Uz + p.bz)
    r = sigmoid(x @ p.Wr + h_prev @ p.Ur + p.br)
    h_tilde = tanh(x @ p.Wh + r * (h_prev @ p.Uh + p.bh))
    return (1.0 - z) * h_prev + z * h_tilde


def gru_sequence(X, lengths, p: GRUParams, reverse: bool = False, backend: str | None = None) -> Tensor:
    """All hidden states of a batch of padded sequences, shape ``(B, T, H)``.

    Row ``b`` reads positions ``0..lengths[b]-1`` (right to left when
    ``reverse``); padded positions never enter the recurrence and hold zeros.
    """
    X = as_tensor(X)
    if X.ndim != 3:
        raise ValueError(f"gru_sequence expects (batch, time, features), got {X.shape}")
    lengths = np.ascontiguousarray(lengths, dtype=np.int64)
    kern = _k.kernels(backend)
    ws = [np.ascontiguousarray(t.data) for t in p.tensors]
    Xd = np.ascontiguousarray(X.data)
    H, *cache = kern["gru_forward"](Xd, lengths, *ws, reverse)

    def bw(g):
        grads = kern["gru_backward"](np.ascontiguousarray(g), Xd, lengths, *ws[:6], *cache, reverse)
        return grads

    return _make(H, (X, *p.tensors), bw)


def gru_sequence_reference(X, lengths, p: GRUParams, reverse: bool = False) -> Tensor:
    """Same contract as :func:`gru_sequence`, built step by step from :func:`gru_step`."""
    from .tensor import stack
    X = as_tensor(X)
    B, T, _ = X.shape
    out = []
    for b in range(B):
        L = int(lengths[b])
        h = Tensor(np.zeros(p.hidden))
        states = [Tensor(np.zeros(p.hidden)) for _ in range(T)]
        order = range(L - 1, -1, -1) if reverse else range(L)
        for t in order:
            h = gru_step(X[b, t], h, p)
            states[t] = h
        out.append(stack(states))
    return stack(out)
