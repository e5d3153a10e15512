"""Glue from raw documents to model-ready examples, shared by the CLI and tests."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import lingfeat, postag
from .corpus import (MAX_CHARS, MAX_PARAGRAPHS, MAX_WORDS, Label, RawDocument,
                     TokenizedDocument, Vocabulary, build_vocabulary, shape_document, tokenize)
from .errors import DataError
from .hiernet import Example, ModelConfig
from .lingfeat import FeatureScaler, FeatureSchema, Lexicon


@dataclass
class DocumentData:
    """A tokenized document with its tags and raw (unscaled) features."""

    tokens: TokenizedDocument
    tags: list[list[str]]
    para_features: np.ndarray  # (n_paragraphs, K)
    doc_features: np.ndarray   # (K,)

    @property
    def id(self) -> str:
        return self.tokens.id

    @property
    def label(self) -> int:
        return int(self.tokens.label)


def analyze(docs: Sequence[RawDocument], lexicon: Lexicon, tagger: postag.TaggerModel | None = None,
            pretagged_dir=None, schema: FeatureSchema | None = None) -> list[DocumentData]:
    """Tokenize, tag (model or ``<dir>/<doc_id>.tsv`` files) and extract features."""
    if tagger is None and pretagged_dir is None:
        raise DataError("either a tagger or a pre-tagged directory is required")
    schema = schema or FeatureSchema.build(lexicon)
    out = []
    for raw in docs:
        tok = tokenize(raw)
        if pretagged_dir is not None:
            tags = postag.load_pretagged(Path(pretagged_dir) / f"{raw.id}.tsv", tok)
        else:
            tags = postag.tag_document(tagger, tok)
        paras, doc_vec = lingfeat.extract_all(tok, tags, lexicon, schema)
        out.append(DocumentData(tok, tags, np.vstack([p.values for p in paras]), doc_vec.values))
    return out


@dataclass
class Preprocessor:
    """Everything fitted on the training partition: vocabulary and scalers."""

    vocab: Vocabulary
    para_scaler: FeatureScaler
    doc_scaler: FeatureScaler
    feature_names: tuple[str, ...]
    max_paragraphs: int = MAX_PARAGRAPHS
    max_words: int = MAX_WORDS
    max_chars: int = MAX_CHARS

    @classmethod
    def fit(cls, train: Sequence[DocumentData], schema: FeatureSchema, min_count: int = 2,
            max_paragraphs: int = MAX_PARAGRAPHS, max_words: int = MAX_WORDS,
            max_chars: int = MAX_CHARS) -> "Preprocessor":
        if not train:
            raise DataError("empty training partition")
        vocab = build_vocabulary([d.tokens for d in train], min_count=min_count)
        para_rows = np.vstack([d.para_features[:max_paragraphs] for d in train])
        doc_rows = np.vstack([d.doc_features for d in train])
        return cls(vocab, FeatureScaler.fit(para_rows), FeatureScaler.fit(doc_rows),
                   schema.names, max_paragraphs, max_words, max_chars)

    def model_config(self, **overrides) -> ModelConfig:
        k = len(self.feature_names)
        base = dict(n_chars=self.vocab.n_chars, n_words=self.vocab.n_words,
                    n_para_features=k, n_doc_features=k, max_paragraphs=self.max_paragraphs,
                    max_words=self.max_words, max_chars=self.max_chars)
        base.update(overrides)
        return ModelConfig(**base)

    def example(self, d: DocumentData) -> Example:
        shaped = shape_document(d.tokens, self.vocab, self.max_paragraphs, self.max_words,
                                self.max_chars)
        para = self.para_scaler.transform(d.para_features[:self.max_paragraphs])
        return Example(shaped, para, self.doc_scaler.transform(d.doc_features))

    def examples(self, data: Sequence[DocumentData]) -> list[Example]:
        return [self.example(d) for d in data]


def corpus_stats(docs: Sequence[RawDocument]) -> dict:
    """Per-label document, paragraph, sentence and token counts plus sources."""
    out: dict = {}
    for label in Label:
        sub = [d for d in docs if d.label == label]
        toks = [tokenize(d) for d in sub]
        n_par = sum(len(t.paragraphs) for t in toks)
        n_sent = sum(len(t.sentences) for t in toks)
        n_tok = sum(len(t.tokens) for t in toks)
        out[label.to_string()] = {
            "documents": len(sub),
            "sources": len({d.source for d in sub}),
            "paragraphs": n_par,
            "sentences": n_sent,
            "tokens": n_tok,
            "paragraphs_per_document": round(n_par / len(sub), 4) if sub else 0.0,
            "tokens_per_document": round(n_tok / len(sub), 4) if sub else 0.0,
        }
    out["by_source"] = dict(sorted(Counter(d.source for d in docs).items()))
    return out
