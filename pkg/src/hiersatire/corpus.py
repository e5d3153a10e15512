"""Corpus ingestion: loading, tokenization, vocabularies, fixed-shape arrays, splits."""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

MAX_PARAGRAPHS = 16
MAX_WORDS = 128
MAX_CHARS = 24

PAD = 0
UNK = 1

PARTITIONS = ("train", "validation", "test")

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_TERMINAL = frozenset(".!?")
_CLOSERS = frozenset("\"')]}”’")
_OPENERS = frozenset("\"'([{“‘")


class Label(IntEnum):
    TRUE_NEWS = 0
    SATIRE = 1

    @classmethod
    def parse(cls, value: str) -> "Label":
        try:
            return _LABEL_STRINGS[value]
        except (KeyError, TypeError):
            raise DataError(f"unknown label {value!r}") from None

    def to_string(self) -> str:
        return "satire" if self is Label.SATIRE else "true"


_LABEL_STRINGS = {"true": Label.TRUE_NEWS, "satire": Label.SATIRE}


@dataclass(frozen=True)
class RawDocument:
    id: str
    source: str
    label: Label
    paragraphs: tuple[str, ...]

    def __post_init__(self):
        if not self.source:
            raise DataError(f"document {self.id!r} has an empty source")
        if not self.paragraphs:
            raise DataError(f"document {self.id!r} has no paragraphs")
        for i, p in enumerate(self.paragraphs):
            if not p.strip():
                raise DataError(f"document {self.id!r} paragraph {i} is empty")

    @property
    def text(self) -> str:
        return "\n\n".join(self.paragraphs)

    def to_json(self) -> dict:
        return {"id": self.id, "source": self.source, "label": self.label.to_string(),
                "paragraphs": list(self.paragraphs)}


@dataclass(frozen=True)
class Token:
    surface: str
    lower: str

    @property
    def chars(self) -> str:
        return self.surface

    @property
    def is_word(self) -> bool:
        # Punctuation tokens are single non-word characters.
        return self.surface[0].isalnum() or self.surface[0] == "_"


@dataclass(frozen=True)
class TokenizedParagraph:
    text: str
    sentences: tuple[tuple[Token, ...], ...]

    @property
    def tokens(self) -> list[Token]:
        return [t for s in self.sentences for t in s]


@dataclass(frozen=True)
class TokenizedDocument:
    id: str
    label: Label
    paragraphs: tuple[TokenizedParagraph, ...]
    source: str = ""

    @property
    def tokens(self) -> list[Token]:
        return [t for p in self.paragraphs for t in p.tokens]

    @property
    def sentences(self) -> list[tuple[Token, ...]]:
        return [s for p in self.paragraphs for s in p.sentences]

    @property
    def text(self) -> str:
        return "\n\n".join(p.text for p in self.paragraphs)


@dataclass
class Vocabulary:
    word_to_index: dict[str, int] = field(default_factory=dict)
    char_to_index: dict[str, int] = field(default_factory=dict)

    @property
    def n_words(self) -> int:
        return len(self.word_to_index) + 2

    @property
    def n_chars(self) -> int:
        return len(self.char_to_index) + 2

    def word_index(self, lower: str) -> int:
        return self.word_to_index.get(lower, UNK)

    def char_index(self, ch: str) -> int:
        return self.char_to_index.get(ch, UNK)

    def to_json(self) -> dict:
        return {"words": sorted(self.word_to_index, key=self.word_to_index.__getitem__),
                "chars": sorted(self.char_to_index, key=self.char_to_index.__getitem__)}

    @classmethod
    def from_json(cls, obj: dict) -> "Vocabulary":
        return cls({w: i + 2 for i, w in enumerate(obj["words"])},
                   {c: i + 2 for i, c in enumerate(obj["chars"])})


@dataclass
class ShapedDocument:
    id: str
    word_indices: np.ndarray     # (P, W) int64
    char_indices: np.ndarray     # (P, W, C) int64
    paragraph_count: int
    word_counts: np.ndarray      # (P,) int64
    label: int


def _parse_paragraphs(value, doc_id) -> tuple[str, ...]:
    if isinstance(value, str):
        # Fallback for single-string bodies: blank lines delimit paragraphs.
        value = re.split(r"\n\s*\n", value)
    if not isinstance(value, list) or not all(isinstance(p, str) for p in value):
        raise DataError(f"document {doc_id!r}: paragraphs must be a list of strings")
    paragraphs = tuple(p.strip() for p in value if p.strip())
    if not paragraphs:
        raise DataError(f"document {doc_id!r} has an empty paragraphs list")
    return paragraphs


def parse_document(obj: dict) -> RawDocument:
    if not isinstance(obj, dict):
        raise DataError("expected a JSON object")
    missing = [k for k in ("id", "source", "label", "paragraphs") if k not in obj]
    if missing:
        raise DataError(f"missing key(s) {', '.join(missing)}")
    doc_id = str(obj["id"])
    return RawDocument(doc_id, str(obj["source"]), Label.parse(obj["label"]),
                       _parse_paragraphs(obj["paragraphs"], doc_id))


def load_corpus(path) -> list[RawDocument]:
    """Read a JSON-Lines corpus, one article per line, in file order."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed JSON at line {lineno}: {exc.msg}") from None
            try:
                docs.append(parse_document(obj))
            except DataError as exc:
                raise DataError(f"{exc} at line {lineno}") from None
    return docs


def write_corpus(docs: Iterable[RawDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d.to_json(), ensure_ascii=False) + "\n")


def _starts_sentence(ch: str) -> bool:
    return ch.isupper() or ch in _OPENERS


def tokenize_paragraph(text: str) -> TokenizedParagraph:
    matches = list(_TOKEN_RE.finditer(text))
    n = len(matches)
    sentences, current = [], []
    i = 0
    while i < n:
        m = matches[i]
        current.append(Token(m.group(), m.group().lower()))
        if m.group() in _TERMINAL:
            # Absorb adjacent closing quotes/brackets into the sentence.
            j, end = i + 1, m.end()
            while j < n and matches[j].start() == end and matches[j].group() in _CLOSERS:
                current.append(Token(matches[j].group(), matches[j].group()))
                end = matches[j].end()
                j += 1
            i = j - 1
            at_end = j == n
            if at_end or (text[end].isspace() and _starts_sentence(matches[j].group()[0])):
                sentences.append(tuple(current))
                current = []
        i += 1
    if current:
        sentences.append(tuple(current))
    return TokenizedParagraph(text, tuple(sentences))


def tokenize(doc: RawDocument) -> TokenizedDocument:
    """Rule tokenizer: word runs and single punctuation characters.

    A sentence ends at ``.``, ``!`` or ``?`` (plus any closing quotes)
    when followed by the end of the paragraph, or by whitespace and a
    capitalized word or opening quote.
    """
    return TokenizedDocument(doc.id, doc.label,
                             tuple(tokenize_paragraph(p) for p in doc.paragraphs), doc.source)


def _ranked(counts: Counter, min_count: int) -> list:
    kept = [k for k, c in counts.items() if c >= min_count]
    return sorted(kept, key=lambda k: (-counts[k], k))


def build_vocabulary(docs: Sequence[TokenizedDocument], min_count: int = 2) -> Vocabulary:
    if not docs:
        raise DataError("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    words, chars = Counter(), Counter()
    for doc in docs:
        for tok in doc.tokens:
            words[tok.lower] += 1
            chars.update(tok.surface)
    word_list = _ranked(words, min_count)
    char_list = _ranked(chars, 1)
    return Vocabulary({w: i + 2 for i, w in enumerate(word_list)},
                      {c: i + 2 for i, c in enumerate(char_list)})


def shape_document(doc: TokenizedDocument, vocab: Vocabulary,
                   max_paragraphs: int = MAX_PARAGRAPHS, max_words: int = MAX_WORDS,
                   max_chars: int = MAX_CHARS) -> ShapedDocument:
    """Pad/truncate to fixed dimensions, keeping the head of every span."""
    words = np.zeros((max_paragraphs, max_words), dtype=np.int64)
    chars = np.zeros((max_paragraphs, max_words, max_chars), dtype=np.int64)
    counts = np.zeros(max_paragraphs, dtype=np.int64)
    paragraphs = doc.paragraphs[:max_paragraphs]
    for i, para in enumerate(paragraphs):
        tokens = para.tokens[:max_words]
        counts[i] = len(tokens)
        for t, tok in enumerate(tokens):
            words[i, t] = vocab.word_index(tok.lower)
            for c, ch in enumerate(tok.surface[:max_chars]):
                chars[i, t, c] = vocab.char_index(ch)
    return ShapedDocument(doc.id, words, chars, len(paragraphs), counts, int(doc.label))


def load_split_spec(path) -> dict[str, str]:
    try:
        with open(path, encoding="utf-8") as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed split spec {path}: {exc.msg}") from None
    if not isinstance(spec, dict):
        raise DataError("split spec must be a JSON object mapping source to partition")
    for source, part in spec.items():
        if part not in PARTITIONS:
            raise DataError(f"source {source!r} mapped to unknown partition {part!r}")
    return spec


def split_by_source(docs: Sequence[RawDocument], spec: dict[str, str]):
    """Route every document to the partition of its source.

    Returns ``(train, validation, test)`` lists in input order.
    """
    parts = {p: [] for p in PARTITIONS}
    for doc in docs:
        try:
            part = spec[doc.source]
        except KeyError:
            raise DataError(f"source {doc.source!r} has no partition") from None
        if part not in parts:
            raise DataError(f"source {doc.source!r} mapped to unknown partition {part!r}")
        parts[part].append(doc)
    return parts["train"], parts["validation"], parts["test"]
