"""Minimal float64 array substrate with reverse-mode differentiation."""
from .gradcheck import grad_check, relative_error
from .kernels import BACKEND
from .optim import schedule, sgd_step, zero_grads
from .rnn import GRUParams, gru_sequence, gru_sequence_reference, gru_step
from .tensor import (
    Parameter,
    ShapeError,
    Tape,
    Tensor,
    add,
    as_tensor,
    backward,
    binary_cross_entropy,
    concat,
    dropout,
    embedding_lookup,
    getitem,
    matmul,
    max_over_time,
    mul,
    reshape,
    sigmoid,
    softmax,
    stack,
    sub,
    tanh,
    total,
)

__all__ = [
    "BACKEND", "GRUParams", "Parameter", "ShapeError", "Tape", "Tensor", "add", "as_tensor",
    "backward", "binary_cross_entropy", "concat", "dropout", "embedding_lookup", "getitem",
    "grad_check", "gru_sequence", "gru_sequence_reference", "gru_step", "matmul",
    "max_over_time", "mul", "relative_error", "reshape", "schedule", "sgd_step", "sigmoid",
    "softmax", "stack", "sub", "tanh", "total", "zero_grads",
]
