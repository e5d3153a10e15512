"""Binary classification metrics with satire as the positive class."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_percentages(self) -> dict[str, float]:
        """Rounded to two decimals, as reported in result tables."""
        return {"acc": round(100 * self.accuracy, 2), "pre": round(100 * self.precision, 2),
                "rec": round(100 * self.recall, 2), "f1": round(100 * self.f1, 2)}


def compute_metrics(predicted, labels) -> Metrics:
    pred = np.asarray(predicted, dtype=int)
    gold = np.asarray(labels, dtype=int)
    if pred.shape != gold.shape:
        raise ValueError("predictions and labels differ in length")
    if pred.size == 0:
        raise ValueError("cannot evaluate an empty document list")
    tp = int(np.sum((pred == 1) & (gold == 1)))
    fp = int(np.sum((pred == 1) & (gold == 0)))
    fn = int(np.sum((pred == 0) & (gold == 1)))
    acc = float(np.mean(pred == gold))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return Metrics(acc, precision, recall, f1)
