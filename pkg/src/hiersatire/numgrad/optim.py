"""Plain SGD with per-epoch multiplicative learning-rate decay."""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .tensor import Parameter

INITIAL_LR = 0.3
DECAY = 0.9


def schedule(epoch: int, initial: float = INITIAL_LR, decay: float = DECAY) -> float:
    """Learning rate for 0-based ``epoch``: ``initial * decay**epoch``."""
    return initial * decay ** epoch


def sgd_step(params: Iterable[Parameter], learning_rate: float) -> None:
    """``value -= lr * grad`` for every parameter, then zero the gradients."""
    for p in params:
        rows = p.touched_rows() if p.row_sparse else None
        if rows is not None:
            p.data[rows] -= learning_rate * p.grad[rows]
        elif not p.row_sparse:
            p.data -= learning_rate * p.grad
        p.zero_grad()
        if not np.all(np.isfinite(p.data if rows is None else p.data[rows])):
            raise FloatingPointError(f"parameter {p.name!r} became non-finite")


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.zero_grad()
