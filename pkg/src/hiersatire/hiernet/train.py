"""Per-document SGD training with validation-F1 early stopping."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .. import numgrad as ng
from ..errors import DataError
from .metrics import Metrics, compute_metrics
from .model import Example, HierNet

log = logging.getLogger(__name__)

MAX_EPOCHS = 100
PATIENCE = 5


class EarlyStopping:
    """Stop once validation F1 has dropped ``patience`` epochs in a row.

    A drop is a strictly lower F1 than the previous epoch. The snapshot of
    the best (earliest maximal) epoch is kept for restoring.
    """

    def __init__(self, patience: int = PATIENCE):
        self.patience = patience
        self.best_f1 = -np.inf
        self.best_epoch = -1
        self.best_state = None
        self.drops = 0
        self._prev = None
        self._epoch = 0

    def update(self, f1: float, snapshot: Callable[[], object]) -> bool:
        self._epoch += 1
        if f1 > self.best_f1:
            self.best_f1, self.best_epoch, self.best_state = f1, self._epoch, snapshot()
        self.drops = self.drops + 1 if self._prev is not None and f1 < self._prev else 0
        self._prev = f1
        return self.drops >= self.patience


@dataclass
class TrainHistory:
    f1: list[float] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    learning_rate: list[float] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def predict(model: HierNet, examples: Sequence[Example]) -> np.ndarray:
    return np.array([model.predict_proba(ex) for ex in examples])


def evaluate(model: HierNet, examples: Sequence[Example]) -> Metrics:
    if not examples:
        raise DataError("cannot evaluate an empty document list")
    probs = predict(model, examples)
    return compute_metrics((probs > 0.5).astype(int), [ex.label for ex in examples])


def train(model: HierNet, train_examples: Sequence[Example], val_examples: Sequence[Example],
          max_epochs: int = MAX_EPOCHS, patience: int = PATIENCE,
          target_f1: float | None = None, initial_lr: float = ng.optim.INITIAL_LR,
          decay: float = ng.optim.DECAY) -> TrainHistory:
    """Train in place; the model ends with the parameters of its best validation epoch.

    ``target_f1`` optionally ends training as soon as validation F1 reaches it.
    """
    if not train_examples:
        raise DataError("empty training set")
    if not val_examples:
        raise DataError("empty validation set")
    seed = model.config.seed
    order_rng = np.random.default_rng([seed, 1])
    drop_rng = np.random.default_rng([seed, 2])
    params = model.parameters
    ng.zero_grads(params)
    stopper = EarlyStopping(patience)
    history = TrainHistory()
    for epoch in range(max_epochs):
        lr = ng.schedule(epoch, initial_lr, decay)
        total = 0.0
        for i in order_rng.permutation(len(train_examples)):
            with ng.Tape() as tape:
                loss = model.loss(train_examples[i], training=True, rng=drop_rng)
            tape.backward(loss)
            ng.sgd_step(params, lr)
            total += float(loss.data)
        f1 = evaluate(model, val_examples).f1
        history.f1.append(f1)
        history.loss.append(total / len(train_examples))
        history.learning_rate.append(lr)
        log.info("epoch %d lr %.4f loss %.4f val_f1 %.4f", epoch + 1, lr, history.loss[-1], f1)
        stop = stopper.update(f1, model.state_dict)
        if stop:
            history.stopped_early = True
            break
        if target_f1 is not None and f1 >= target_f1:
            break
    model.load_state(stopper.best_state)
    history.best_epoch = stopper.best_epoch
    return history
