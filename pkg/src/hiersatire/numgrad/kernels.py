"""Fused GRU sequence kernels.

One source per kernel, compiled with ``numba.njit`` when available and
enabled, otherwise executed as plain numpy. Set ``HIERSATIRE_JIT=0`` to
force the numpy path (the flag is read once, at import).

Gate math per active step (row ``b`` is active at position ``t`` when
``t < lengths[b]``)::

    z  = sigmoid(x Wz + h Uz + bz)
    r  = sigmoid(x Wr + h Ur + br)
    c  = h Uh + bh
    h~ = tanh(x Wh + r * c)
    h' = (1 - z) * h + z * h~

Inactive rows keep their state and emit zeros.
"""
from __future__ import annotations

import os

import numpy as np


def _gru_forward(X, lengths, Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh, reverse):
    B, T, _ = X.shape
    Hd = Uz.shape[0]
    H = np.zeros((B, T, Hd))
    Z = np.zeros((T, B, Hd))
    R = np.zeros((T, B, Hd))
    C = np.zeros((T, B, Hd))
    HT = np.zeros((T, B, Hd))
    HP = np.zeros((T, B, Hd))
    h = np.zeros((B, Hd))
    for s in range(T):
        t = T - 1 - s if reverse else s
        m = (lengths > t).astype(np.float64).reshape(B, 1)
        x = np.ascontiguousarray(X[:, t, :])
        z = 0.5 * (1.0 + np.tanh(0.5 * (x @ Wz + h @ Uz + bz)))
        r = 0.5 * (1.0 + np.tanh(0.5 * (x @ Wr + h @ Ur + br)))
        c = h @ Uh + bh
        ht = np.tanh(x @ Wh + r * c)
        hn = (1.0 - z) * h + z * ht
        Z[s] = z
        R[s] = r
        C[s] = c
        HT[s] = ht
        HP[s] = h
        H[:, t, :] = m * hn
        h = m * hn + (1.0 - m) * h
    return H, Z, R, C, HT, HP


def _gru_backward(dH, X, lengths, Wz, Wr, Wh, Uz, Ur, Uh, Z, R, C, HT, HP, reverse):
    B, T, D = X.shape
    Hd = Uz.shape[0]
    dX = np.zeros((B, T, D))
    dWz = np.zeros((D, Hd))
    dWr = np.zeros((D, Hd))
    dWh = np.zeros((D, Hd))
    dUz = np.zeros((Hd, Hd))
    dUr = np.zeros((Hd, Hd))
    dUh = np.zeros((Hd, Hd))
    dbz = np.zeros(Hd)
    dbr = np.zeros(Hd)
    dbh = np.zeros(Hd)
    WzT = np.ascontiguousarray(Wz.T)
    WrT = np.ascontiguousarray(Wr.T)
    WhT = np.ascontiguousarray(Wh.T)
    UzT = np.ascontiguousarray(Uz.T)
    UrT = np.ascontiguousarray(Ur.T)
    UhT = np.ascontiguousarray(Uh.T)
    dh = np.zeros((B, Hd))
    for s in range(T - 1, -1, -1):
        t = T - 1 - s if reverse else s
        m = (lengths > t).astype(np.float64).reshape(B, 1)
        z = Z[s]
        r = R[s]
        c = C[s]
        ht = HT[s]
        hp = HP[s]
        x = np.ascontiguousarray(X[:, t, :])
        xT = np.ascontiguousarray(x.T)
        hpT = np.ascontiguousarray(hp.T)
        dtot = dh + m * np.ascontiguousarray(dH[:, t, :])
        dz = m * dtot * (ht - hp)
        dah = m * dtot * z * (1.0 - ht * ht)
        dc = dah * r
        dar = dah * c * r * (1.0 - r)
        daz = dz * z * (1.0 - z)
        dWz += xT @ daz
        dWr += xT @ dar
        dWh += xT @ dah
        dUz += hpT @ daz
        dUr += hpT @ dar
        dUh += hpT @ dc
        dbz += daz.sum(axis=0)
        dbr += dar.sum(axis=0)
        dbh += dc.sum(axis=0)
        dX[:, t, :] = daz @ WzT + dar @ WrT + dah @ WhT
        dh = m * (dtot * (1.0 - z) + daz @ UzT + dar @ UrT + dc @ UhT) + (1.0 - m) * dtot
    return dX, dWz, dWr, dWh, dUz, dUr, dUh, dbz, dbr, dbh


def _want_jit() -> bool:
    flag = os.environ.get("HIERSATIRE_JIT", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

numpy_kernels = {"gru_forward": _gru_forward, "gru_backward": _gru_backward}

if HAS_NUMBA:
    numba_kernels = {
        "gru_forward": numba.njit(cache=True)(_gru_forward),
        "gru_backward": numba.njit(cache=True)(_gru_backward),
    }
else:  # pragma: no cover
    numba_kernels = None

BACKEND = "numba" if (HAS_NUMBA and _want_jit()) else "numpy"
_ACTIVE_KERNELS = numba_kernels if BACKEND == "numba" else numpy_kernels


def kernels(backend: str | None = None) -> dict:
    if backend is None:
        return _ACTIVE_KERNELS
    if backend == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("numba is not installed")
        return numba_kernels
    if backend == "numpy":
        return numpy_kernels
    raise ValueError(f"unknown backend {backend!r}")
