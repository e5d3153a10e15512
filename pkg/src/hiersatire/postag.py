"""Greedy averaged-perceptron POS tagger over the Penn Treebank tagset.

Also reads externally produced tag files (``token<TAB>tag`` lines with a
blank line between sentences) and checks them against our tokenization.
"""
from __future__ import annotations

import json
import random
import re
from collections import defaultdict
from importlib import resources
from typing import Iterable, Sequence

from .errors import DataError

WORD_TAGS = (
    "CC", "CD", "DT", "EX", "FW", "IN", "JJ", "JJR", "JJS", "LS", "MD", "NN", "NNS",
    "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP", "SYM", "TO",
    "UH", "VB", "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP", "WP$", "WRB",
)
PUNCT_TAGS = ("#", "$", "''", "``", "(", ")", ",", ".", ":")
TAGSET = WORD_TAGS + PUNCT_TAGS

MODEL_VERSION = "avgperc-1"

_NUMERIC = re.compile(r"[\d.,]*\d[\d.,]*")
_START = ("-START-", "-START2-")
_END = ("-END-", "-END2-")


def _features(i: int, words: Sequence[str], context: Sequence[str], prev_tag: str) -> list[str]:
    word = words[i]
    lower = context[i + 1]
    feats = [
        "bias",
        "w=" + lower,
        "s1=" + lower[-1:],
        "s2=" + lower[-2:],
        "s3=" + lower[-3:],
        "pt=" + prev_tag,
        "pw=" + context[i],
        "nw=" + context[i + 2],
    ]
    if word[:1].isupper():
        feats.append("cap")
    if _NUMERIC.fullmatch(word):
        feats.append("digit")
    if "-" in word:
        feats.append("hyph")
    return feats


def _context(words: Sequence[str]) -> list[str]:
    return [_START[0], *(w.lower() for w in words), _END[0]]


class TaggerModel:
    """Averaged perceptron weights; call :meth:`finalize` before tagging."""

    def __init__(self):
        self.weights: dict[str, dict[str, float]] = {}
        self.version = MODEL_VERSION
        self.finalized = False
        # Averaging bookkeeping: i counts completed steps; totals hold the
        # weight-time integral up to each key's last change.
        self._totals: dict[tuple[str, str], float] = defaultdict(float)
        self._stamps: dict[tuple[str, str], int] = defaultdict(int)
        self._i = 0

    def scores(self, feats: Iterable[str]) -> list[float]:
        acc = dict.fromkeys(TAGSET, 0.0)
        for f in feats:
            row = self.weights.get(f)
            if row:
                for tag, w in row.items():
                    acc[tag] += w
        return [acc[t] for t in TAGSET]

    def predict(self, feats: Iterable[str]) -> str:
        s = self.scores(feats)
        best = max(range(len(TAGSET)), key=lambda k: (s[k], -k))
        return TAGSET[best]

    def _bump(self, feat: str, tag: str, delta: float) -> None:
        row = self.weights.setdefault(feat, {})
        w = row.get(tag, 0.0)
        key = (feat, tag)
        self._totals[key] += (self._i - self._stamps[key]) * w
        self._stamps[key] = self._i
        row[tag] = w + delta

    def step(self, truth: str, guess: str, feats: Sequence[str]) -> None:
        if truth != guess:
            for f in feats:
                self._bump(f, truth, 1.0)
                self._bump(f, guess, -1.0)
        self._i += 1

    def finalize(self) -> None:
        """Replace every weight with its mean over all completed training steps."""
        if self.finalized:
            return
        n = max(self._i, 1)
        for feat, row in self.weights.items():
            for tag, w in list(row.items()):
                key = (feat, tag)
                total = self._totals[key] + (self._i - self._stamps[key]) * w
                avg = total / n
                if avg == 0.0:
                    del row[tag]
                else:
                    row[tag] = avg
        self.weights = {f: r for f, r in self.weights.items() if r}
        self._totals.clear()
        self._stamps.clear()
        self.finalized = True

    def to_json(self) -> dict:
        return {"version": self.version, "weights": self.weights}

    @classmethod
    def from_json(cls, obj: dict) -> "TaggerModel":
        if obj.get("version") != MODEL_VERSION:
            raise DataError(f"tagger version {obj.get('version')!r} != {MODEL_VERSION!r}")
        m = cls()
        m.weights = {f: {t: float(w) for t, w in row.items()} for f, row in obj["weights"].items()}
        m.finalized = True
        return m

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path) -> "TaggerModel":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def train_tagger(corpus: Sequence[Sequence[tuple[str, str]]], epochs: int = 5,
                 seed: int = 0, finalize: bool = True) -> TaggerModel:
    """Greedy left-to-right training; previous-tag features use the model's own guesses."""
    if not corpus or not any(corpus):
        raise DataError("empty training corpus")
    known = set(TAGSET)
    for sent in corpus:
        for tok, tag in sent:
            if tag not in known:
                raise DataError(f"unknown tag {tag!r} in training data (token {tok!r})")
    model = TaggerModel()
    order = list(range(len(corpus)))
    rng = random.Random(seed)
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            sent = corpus[k]
            words = [w for w, _ in sent]
            context = _context(words)
            prev = _START[0]
            for i, (_, truth) in enumerate(sent):
                feats = _features(i, words, context, prev)
                guess = model.predict(feats)
                model.step(truth, guess, feats)
                prev = guess
    if finalize:
        model.finalize()
    return model


def tag(model: TaggerModel, sentence: Sequence) -> list[str]:
    if not model.finalized:
        raise DataError("tagger model is not finalized")
    words = [getattr(t, "surface", t) for t in sentence]
    context = _context(words)
    prev, out = _START[0], []
    for i in range(len(words)):
        prev = model.predict(_features(i, words, context, prev))
        out.append(prev)
    return out


def tag_document(model: TaggerModel, doc) -> list[list[str]]:
    """One flat tag list per paragraph of a TokenizedDocument."""
    return [[t for sent in para.sentences for t in tag(model, sent)] for para in doc.paragraphs]


def accuracy(model: TaggerModel, corpus: Sequence[Sequence[tuple[str, str]]]) -> float:
    total = correct = 0
    for sent in corpus:
        pred = tag(model, [w for w, _ in sent])
        correct += sum(p == t for p, (_, t) in zip(pred, sent))
        total += len(sent)
    return correct / total if total else 0.0


def parse_tagged(text: str) -> list[list[tuple[str, str]]]:
    sentences, current = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            if current:
                sentences.append(current)
                current = []
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise DataError(f"tagged line {lineno} is not token<TAB>tag: {line!r}")
        current.append((parts[0], parts[1]))
    if current:
        sentences.append(current)
    return sentences


def read_tagged(path) -> list[list[tuple[str, str]]]:
    with open(path, encoding="utf-8") as fh:
        return parse_tagged(fh.read())


def write_tagged(path, sentences: Iterable[Sequence[tuple[str, str]]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sent in sentences:
            for tok, t in sent:
                fh.write(f"{tok}\t{t}\n")
            fh.write("\n")


def sample_corpus() -> list[list[tuple[str, str]]]:
    """Small hand-tagged news-style corpus shipped with the package."""
    text = resources.files("hiersatire.data").joinpath("tagged_sample.tsv").read_text("utf-8")
    return parse_tagged(text)


def default_tagger(seed: int = 0) -> TaggerModel:
    return train_tagger(sample_corpus(), epochs=10, seed=seed)


def load_pretagged(path, doc) -> list[list[str]]:
    """Tags from an external tagger, checked token-by-token against ``doc``."""
    with open(path, encoding="utf-8") as fh:
        sentences = parse_tagged(fh.read())
    flat = [pair for s in sentences for pair in s]
    expected = [t.surface for t in doc.tokens]
    for pos, (tok, _) in enumerate(flat):
        if pos >= len(expected):
            raise DataError(f"pre-tagged file has extra token {tok!r} at position {pos}")
        if tok != expected[pos]:
            raise DataError(f"pre-tagged token mismatch at position {pos}: "
                            f"expected {expected[pos]!r}, found {tok!r}")
    if len(flat) < len(expected):
        raise DataError(f"pre-tagged file ends at position {len(flat)}; "
                        f"document has {len(expected)} tokens")
    known = set(TAGSET)
    for pos, (_, t) in enumerate(flat):
        if t not in known:
            raise DataError(f"unknown tag {t!r} at position {pos}")
    out, k = [], 0
    for para in doc.paragraphs:
        n = len(para.tokens)
        out.append([t for _, t in flat[k:k + n]])
        k += n
    return out
