"""Central finite-difference check of tape gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Parameter, Tape, Tensor


def relative_error(analytic, numeric) -> np.ndarray:
    a, n = np.asarray(analytic), np.asarray(numeric)
    return np.abs(a - n) / np.maximum(1e-8, np.abs(a) + np.abs(n))


def grad_check(f: Callable[[], Tensor], params, h: float = 1e-5,
               max_coords: int | None = None, seed: int = 0) -> float:
    """Max relative error between backward() and central differences.

    ``f`` must rebuild the scalar loss from scratch on each call and be
    deterministic (dropout off). ``max_coords`` samples that many
    coordinates per parameter instead of sweeping all of them; for
    row-sparse tables the sample is drawn from rows the forward pass touched.
    """
    if isinstance(params, Tensor):
        params = [params]
    params: Sequence[Tensor] = list(params)
    for p in params:
        if isinstance(p, Parameter):
            p.zero_grad()
        else:
            p.grad = None
    with Tape() as tape:
        loss = f()
    tape.backward(loss)
    touched = {id(p): p.touched_rows() for p in params
               if isinstance(p, Parameter) and p.row_sparse}
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in params:
        analytic = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        flat = p.data.reshape(-1)
        coords = np.arange(flat.size)
        rows = touched.get(id(p))
        if rows is not None:
            width = flat.size // p.data.shape[0]
            coords = (rows[:, None] * width + np.arange(width)).ravel()
        if max_coords is not None and coords.size > max_coords:
            coords = rng.choice(coords, size=max_coords, replace=False)
        for i in coords:
            old = flat[i]
            flat[i] = old + h
            up = float(f().data)
            flat[i] = old - h
            down = float(f().data)
            flat[i] = old
            numeric = (up - down) / (2.0 * h)
            worst = max(worst, float(relative_error(analytic.reshape(-1)[i], numeric)))
        if isinstance(p, Parameter):
            p.zero_grad()
    return worst
