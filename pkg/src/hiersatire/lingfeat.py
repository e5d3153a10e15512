"""Linguistic feature families for paragraph and document spans.

Four families, always in this order: psycholinguistic (lexicon category
frequencies), stylistic (POS tag frequencies), readability, structural.
"""
from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .corpus import Token, TokenizedDocument, TokenizedParagraph
from .errors import DataError, FeatureError
from .postag import TAGSET

FAMILIES = ("psycholinguistic", "stylistic", "readability", "structural")
READABILITY_NAMES = ("FRE", "FOG", "ARI", "CLI", "SylPerWord")
STRUCTURAL_NAMES = ("WordCount", "LogWordCount", "Punc", "Digit", "Cap", "SentCount")

_VOWEL_GROUPS = re.compile(r"[aeiouy]+")
_PUNCT_CHAR = re.compile(r"[^\w\s]")


# -- lexicon -----------------------------------------------------------------

@dataclass(frozen=True)
class Category:
    name: str
    literals: frozenset
    prefixes: tuple


class Lexicon:
    """LIWC-style category lexicon with literal and prefix (``word*``) patterns."""

    def __init__(self, categories: Sequence[Category]):
        names = [c.name for c in categories]
        if len(set(names)) != len(names):
            raise DataError("lexicon category names must be unique")
        for c in categories:
            if "" in c.literals or "" in c.prefixes:
                raise DataError(f"lexicon category {c.name!r} has an empty pattern")
        self.categories = tuple(categories)
        self._cache: dict[str, tuple[int, ...]] = {}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.categories)

    def __len__(self):
        return len(self.categories)

    def match(self, word: str) -> tuple[int, ...]:
        """Indices of the categories a lowercase word belongs to."""
        hit = self._cache.get(word)
        if hit is None:
            hit = tuple(i for i, c in enumerate(self.categories)
                        if word in c.literals or any(word.startswith(p) for p in c.prefixes))
            self._cache[word] = hit
        return hit

    @classmethod
    def parse(cls, text: str) -> "Lexicon":
        lines = text.splitlines()
        try:
            start = next(i for i, l in enumerate(lines) if l.strip() == "%")
            stop = next(i for i, l in enumerate(lines[start + 1:], start + 1) if l.strip() == "%")
        except StopIteration:
            raise DataError("lexicon header must be delimited by '%' lines") from None
        order, by_id = [], {}
        for line in lines[start + 1:stop]:
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) < 2:
                raise DataError(f"bad lexicon header line {line!r}")
            by_id[parts[0]] = parts[1]
            order.append(parts[0])
        literals = {cid: set() for cid in order}
        prefixes = {cid: set() for cid in order}
        for lineno, line in enumerate(lines[stop + 1:], stop + 2):
            if not line.strip():
                continue
            word, _, rest = line.strip().partition("\t")
            ids = [t for t in re.split(r"[\s,]+", rest) if t]
            if not word or not ids:
                raise DataError(f"bad lexicon entry at line {lineno}: {line!r}")
            word = word.strip().lower()
            for cid in ids:
                if cid not in by_id:
                    raise DataError(f"lexicon line {lineno} references unknown category id {cid}")
                if word.endswith("*"):
                    if len(word) == 1:
                        raise DataError(f"empty prefix pattern at lexicon line {lineno}")
                    prefixes[cid].add(word[:-1])
                else:
                    literals[cid].add(word)
        return cls([Category(by_id[cid], frozenset(literals[cid]), tuple(sorted(prefixes[cid])))
                    for cid in order])

    @classmethod
    def load(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    @classmethod
    def stub(cls) -> "Lexicon":
        """The small open lexicon shipped with the package."""
        return cls.parse(stub_lexicon_text())


def stub_lexicon_text() -> str:
    return resources.files("hiersatire.data").joinpath("stub_lexicon.dic").read_text(encoding="utf-8")


# -- feature containers ------------------------------------------------------

@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    families: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            dup = sorted({n for n in self.names if self.names.count(n) > 1})
            raise FeatureError(f"duplicate feature names: {dup}")

    @classmethod
    def build(cls, lexicon: Lexicon) -> "FeatureSchema":
        groups = (lexicon.names, TAGSET, READABILITY_NAMES, STRUCTURAL_NAMES)
        names = tuple(n for g in groups for n in g)
        families = tuple(f for f, g in zip(FAMILIES, groups) for _ in g)
        return cls(names, families)

    def __len__(self):
        return len(self.names)

    def family_mask(self, family: str) -> np.ndarray:
        return np.array([f == family for f in self.families])


@dataclass
class FeatureVector:
    level: str  # "paragraph" | "document"
    schema: FeatureSchema
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.schema),):
            raise FeatureError("feature vector does not match its schema")
        if not np.all(np.isfinite(self.values)):
            raise FeatureError("non-finite feature value")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.schema.names, self.values.tolist()))

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.schema.names.index(name)])


# -- family extractors -------------------------------------------------------

def _words(tokens: Sequence[Token]) -> list[Token]:
    return [t for t in tokens if t.is_word]


def psycholinguistic_features(tokens: Sequence[Token], lexicon: Lexicon) -> np.ndarray:
    """Per-category match counts divided by the number of word tokens."""
    counts = np.zeros(len(lexicon))
    words = _words(tokens)
    if not words:
        return counts
    for w in words:
        for idx in lexicon.match(w.lower):
            counts[idx] += 1
    return counts / len(words)


def stylistic_features(tags: Sequence[str]) -> np.ndarray:
    index = _TAG_INDEX
    counts = np.zeros(len(TAGSET))
    for tag in tags:
        try:
            counts[index[tag]] += 1
        except KeyError:
            raise FeatureError(f"unknown tag {tag!r}") from None
    if tags:
        counts /= len(tags)
    return counts


_TAG_INDEX = {t: i for i, t in enumerate(TAGSET)}


def count_syllables(word: str) -> int:
    w = word.lower()
    if not any(ch.isalpha() for ch in w):
        return 1
    n = len(_VOWEL_GROUPS.findall(w))
    if n > 1 and w.endswith("e") and not w.endswith("le"):
        n -= 1
    return max(n, 1)


def readability_features(sentences: Sequence[Sequence[Token]]) -> np.ndarray:
    """FRE, Gunning Fog, ARI, Coleman-Liau and syllables per word."""
    words = [t for s in sentences for t in s if t.is_word]
    n_sent = len(sentences)
    n_words = len(words)
    if n_words == 0 or n_sent == 0:
        raise FeatureError("empty span")
    syllables = [count_syllables(w.surface) for w in words]
    n_syl = sum(syllables)
    n_complex = sum(1 for s in syllables if s >= 3)
    n_letters = sum(1 for w in words for ch in w.surface if ch.isalpha())
    wps = n_words / n_sent
    spw = n_syl / n_words
    fre = 206.835 - 1.015 * wps - 84.6 * spw
    fog = 0.4 * (wps + 100.0 * n_complex / n_words)
    ari = 4.71 * (n_letters / n_words) + 0.5 * wps - 21.43
    cli = 0.0588 * (100.0 * n_letters / n_words) - 0.296 * (100.0 * n_sent / n_words) - 15.8
    return np.array([fre, fog, ari, cli, spw])


def structural_features(text: str, n_words: int, n_sentences: int) -> np.ndarray:
    punc = len(_PUNCT_CHAR.findall(text))
    digits = sum(ch.isdigit() for ch in text)
    caps = sum(ch.isupper() for ch in text)
    return np.array([n_words, math.log1p(n_words), punc, digits, caps, n_sentences], dtype=float)


def span_features(text: str, sentences: Sequence[Sequence[Token]], tags: Sequence[str],
                  lexicon: Lexicon) -> np.ndarray:
    tokens = [t for s in sentences for t in s]
    if len(tags) != len(tokens):
        raise FeatureError(f"{len(tags)} tags for {len(tokens)} tokens")
    n_words = len(_words(tokens))
    return np.concatenate([
        psycholinguistic_features(tokens, lexicon),
        stylistic_features(tags),
        readability_features(sentences),
        structural_features(text, n_words, len(sentences)),
    ])


def extract_all(doc: TokenizedDocument, tags: Sequence[Sequence[str]], lexicon: Lexicon,
                schema: FeatureSchema | None = None):
    """Paragraph feature vectors and one whole-document feature vector.

    ``tags`` holds one flat tag list per paragraph. The document vector is
    computed over the concatenated span, not averaged from paragraphs.
    """
    schema = schema or FeatureSchema.build(lexicon)
    if len(tags) != len(doc.paragraphs):
        raise FeatureError(f"document {doc.id!r}: {len(tags)} tag lists for "
                           f"{len(doc.paragraphs)} paragraphs")
    para_vecs = []
    for i, (para, ptags) in enumerate(zip(doc.paragraphs, tags)):
        try:
            values = span_features(para.text, para.sentences, ptags, lexicon)
        except FeatureError as exc:
            raise FeatureError(f"document {doc.id!r} paragraph {i}: {exc}") from None
        para_vecs.append(FeatureVector("paragraph", schema, values))
    all_tags = [t for ptags in tags for t in ptags]
    try:
        doc_values = span_features(doc.text, doc.sentences, all_tags, lexicon)
    except FeatureError as exc:
        raise FeatureError(f"document {doc.id!r}: {exc}") from None
    return para_vecs, FeatureVector("document", schema, doc_values)


# -- scaling -----------------------------------------------------------------

@dataclass
class FeatureScaler:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, vectors) -> "FeatureScaler":
        X = _as_matrix(vectors)
        if X.shape[0] == 0:
            raise FeatureError("cannot fit a scaler on zero vectors")
        return cls(X.mean(axis=0), X.std(axis=0))

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.mean.shape[0]:
            raise FeatureError(f"dimension mismatch: scaler has {self.mean.shape[0]} "
                               f"features, input has {x.shape[-1]}")
        safe = np.where(self.std > 0, self.std, 1.0)
        return np.where(self.std > 0, (x - self.mean) / safe, 0.0)

    def apply(self, v: FeatureVector) -> FeatureVector:
        return FeatureVector(v.level, v.schema, self.transform(v.values))


def fit_scaler(train_vectors) -> FeatureScaler:
    return FeatureScaler.fit(train_vectors)


def apply_scaler(scaler: FeatureScaler, v):
    if isinstance(v, FeatureVector):
        return scaler.apply(v)
    return scaler.transform(v)


def _as_matrix(vectors) -> np.ndarray:
    if isinstance(vectors, np.ndarray):
        return np.atleast_2d(vectors).astype(float)
    rows = [v.values if isinstance(v, FeatureVector) else np.asarray(v, float) for v in vectors]
    if not rows:
        return np.zeros((0, 0))
    if len({r.shape for r in rows}) != 1:
        raise FeatureError("dimension mismatch among feature vectors")
    return np.vstack(rows)


# -- export ------------------------------------------------------------------

def write_features_csv(path, schema: FeatureSchema, rows) -> None:
    """``rows`` yields ``(doc_id, paragraph_vectors, document_vector)``."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "paragraph_index", "level", *schema.names])
        for doc_id, para_vecs, doc_vec in rows:
            for i, v in enumerate(para_vecs):
                writer.writerow([doc_id, i, "paragraph", *(repr(float(x)) for x in v.values)])
            writer.writerow([doc_id, -1, "document", *(repr(float(x)) for x in doc_vec.values)])


def read_features_csv(path, schema: FeatureSchema | None = None):
    """Inverse of :func:`write_features_csv`: ``{doc_id: (para_matrix, doc_vector)}``.

    Leading ``#`` provenance lines are skipped.
    """
    out: dict[str, tuple[list, np.ndarray | None]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader)
        names = tuple(header[3:])
        if schema is not None and names != schema.names:
            raise FeatureError(f"{path}: feature columns do not match the lexicon/tagset schema")
        for row in reader:
            doc_id, level, values = row[0], row[2], np.array(row[3:], dtype=float)
            paras, doc_vec = out.setdefault(doc_id, ([], None))
            if level == "document":
                out[doc_id] = (paras, values)
            else:
                paras.append(values)
    return {k: (np.array(p), d) for k, (p, d) in out.items()}
