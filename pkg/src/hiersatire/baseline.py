"""Linear max-margin baselines over word and character n-grams.

Training minimizes the class-balanced primal hinge objective

    1/2 ||w||^2 + C * sum_j beta_j * max(0, 1 - y_j (w.x_j + b))

with full-batch subgradient steps of size 1/t on w. The bias is
unregularized and is set to its exact minimizer after every step (the
objective is piecewise linear in b). The iterate with the lowest objective
is kept.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import TokenizedDocument
from .errors import DataError
from .hiernet.metrics import Metrics, compute_metrics
from .lingfeat import FeatureScaler

C_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
CHAR_PREFIX = "c:"


def word_grams(doc: TokenizedDocument, orders=(1, 2)) -> Counter:
    """Lowercased token n-grams, punctuation included; grams never span paragraphs."""
    counts: Counter = Counter()
    for para in doc.paragraphs:
        toks = [t.lower for t in para.tokens]
        for n in orders:
            for i in range(len(toks) - n + 1):
                counts[" ".join(toks[i:i + n])] += 1
    return counts


def char_grams(text: str, orders=(2, 3)) -> Counter:
    s = text.lower()
    counts: Counter = Counter()
    for n in orders:
        for i in range(len(s) - n + 1):
            counts[CHAR_PREFIX + s[i:i + n]] += 1
    return counts


def _raw_text(doc) -> str:
    return " ".join(p.text for p in doc.paragraphs)


@dataclass
class NGramFeaturizer:
    word_orders: tuple = (1, 2)
    char_orders: tuple = (2, 3)
    min_df: int = 2
    vocabulary: dict = field(default_factory=dict)
    lf_names: tuple = ()
    lf_scaler: FeatureScaler | None = None

    def grams(self, doc: TokenizedDocument) -> Counter:
        counts = word_grams(doc, self.word_orders) if self.word_orders else Counter()
        if self.char_orders:
            counts.update(char_grams(_raw_text(doc), self.char_orders))
        return counts

    def fit(self, docs: Sequence[TokenizedDocument], lf_train=None, lf_names=()) -> "NGramFeaturizer":
        """Build the gram vocabulary (and LF scaler) from training documents only."""
        df: Counter = Counter()
        for doc in docs:
            df.update(self.grams(doc).keys())
        kept = sorted(g for g, c in df.items() if c >= self.min_df)
        self.vocabulary = {g: i for i, g in enumerate(kept)}
        if lf_train is not None:
            self.lf_scaler = FeatureScaler.fit(np.asarray(lf_train, dtype=float))
            self.lf_names = tuple(lf_names) or tuple(f"lf{k}" for k in range(len(self.lf_scaler.mean)))
        return self

    @property
    def n_grams(self) -> int:
        return len(self.vocabulary)

    @property
    def columns(self) -> list[str]:
        cols = [""] * self.n_grams
        for g, i in self.vocabulary.items():
            cols[i] = g
        return cols + list(self.lf_names)

    def featurize(self, doc: TokenizedDocument, lf=None) -> dict[int, float]:
        out = {}
        for g, c in self.grams(doc).items():
            j = self.vocabulary.get(g)
            if j is not None:
                out[j] = float(c)
        if self.lf_scaler is not None:
            if lf is None:
                raise DataError(f"document {doc.id!r}: linguistic features required")
            for k, v in enumerate(self.lf_scaler.transform(lf)):
                out[self.n_grams + k] = float(v)
        return out

    def transform(self, docs: Sequence[TokenizedDocument], lf=None) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for r, doc in enumerate(docs):
            feats = self.featurize(doc, None if lf is None else lf[r])
            for j in sorted(feats):
                rows.append(r)
                cols.append(j)
                vals.append(feats[j])
        return sp.csr_matrix((vals, (rows, cols)), shape=(len(docs), len(self.columns)))


def balanced_weights(labels) -> np.ndarray:
    """beta_j = N / (2 * N_class(j)); sums to N for any class ratio."""
    y = np.asarray(labels, dtype=int)
    counts = np.bincount(y, minlength=2)
    if (counts == 0).any():
        raise DataError("training set contains a single class")
    return y.size / (2.0 * counts[y])


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    C: float
    epochs: int = 0
    seed: int = 0
    objective: float = float("nan")

    def decision(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def predict(self, X) -> np.ndarray:
        return (self.decision(X) > 0).astype(int)

    def to_json(self, columns: Sequence[str]) -> dict:
        if len(columns) != self.weights.size:
            raise DataError("column count does not match weight length")
        return {"columns": list(columns), "weights": self.weights.tolist(),
                "bias": self.bias, "C": self.C}

    def save(self, path, columns) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(columns), fh)


def hinge_objective(X, y_pm, beta, w, b, C) -> float:
    margins = y_pm * (np.asarray(X @ w).ravel() + b)
    return 0.5 * float(w @ w) + C * float(beta @ np.maximum(0.0, 1.0 - margins))


def optimal_bias(scores, y_pm, beta) -> float:
    """Exact argmin over b of sum_j beta_j * max(0, 1 - y_j (s_j + b))."""
    knots = y_pm - scores
    order = np.argsort(knots, kind="stable")
    c, yk, bk = knots[order], y_pm[order], beta[order]
    # slope just right of knot k: negatives at or left of it push up,
    # positives strictly right of it pull down
    neg_left = np.cumsum(np.where(yk < 0, bk, 0.0))
    pos_total = np.sum(np.where(yk > 0, bk, 0.0))
    pos_left = np.cumsum(np.where(yk > 0, bk, 0.0))
    slope = neg_left - (pos_total - pos_left)
    tol = 1e-12 * float(beta.sum())
    k = int(np.argmax(slope >= -tol)) if (slope >= -tol).any() else c.size - 1
    # a flat minimum between two knots: take its midpoint (widest margin both ways)
    if abs(slope[k]) <= tol and k + 1 < c.size:
        return float(0.5 * (c[k] + c[k + 1]))
    return float(c[k])


def train_linear(X, labels, C: float, epochs: int = 2000, seed: int = 0) -> LinearModel:
    X = sp.csr_matrix(X, dtype=float)
    y = np.asarray(labels, dtype=int)
    beta = balanced_weights(y)
    ypm = np.where(y == 1, 1.0, -1.0)
    w = np.zeros(X.shape[1])
    b = optimal_bias(np.zeros(X.shape[0]), ypm, beta)
    best = (hinge_objective(X, ypm, beta, w, b, C), w.copy(), b)
    Xt = X.T.tocsr()
    for t in range(1, epochs + 1):
        margins = ypm * (X @ w + b)
        coef = np.where(margins < 1.0, C * beta * ypm, 0.0)
        w = w - (w - Xt @ coef) / t
        b = optimal_bias(X @ w, ypm, beta)
        obj = hinge_objective(X, ypm, beta, w, b, C)
        if obj < best[0]:
            best = (obj, w.copy(), b)
    obj, w, b = best
    return LinearModel(w, float(b), C, epochs, seed, obj)


def select_C(X_train, y_train, X_val, y_val, grid=C_GRID, epochs: int = 2000,
             seed: int = 0) -> tuple[LinearModel, dict[float, float]]:
    """Train on every grid value; keep the best validation F1 (earlier grid entry on ties)."""
    scores, best = {}, None
    for C in grid:
        m = train_linear(X_train, y_train, C, epochs, seed)
        f1 = compute_metrics(m.predict(X_val), y_val).f1
        scores[C] = f1
        if best is None or f1 > scores[best.C]:
            best = m
    return best, scores


def evaluate_linear(model: LinearModel, X, labels) -> Metrics:
    return compute_metrics(model.predict(X), labels)


def top_weighted(model: LinearModel, columns: Sequence[str], k: int) -> tuple[list[str], list[str]]:
    """Most-positive (satire) and most-negative (true) columns; ties by column index."""
    if k <= 0:
        return [], []
    w = model.weights
    idx = np.arange(w.size)
    pos = sorted(idx[w > 0], key=lambda j: (-w[j], j))[:k]
    neg = sorted(idx[w < 0], key=lambda j: (w[j], j))[:k]
    return [columns[j] for j in pos], [columns[j] for j in neg]
