"""Seeded synthetic corpora and shaped documents for tests and benchmarks."""
from __future__ import annotations

import string

import numpy as np

from .corpus import MAX_CHARS, MAX_PARAGRAPHS, MAX_WORDS, Label, RawDocument, ShapedDocument

MARKERS = ("zorblat", "quibbix")


def random_shaped_document(rng: np.random.Generator, n_paragraphs: int | None = None,
                           max_len: int = 8, n_words: int = 30, n_chars: int = 20,
                           label: int = 1, doc_id: str = "synthetic",
                           dims=(MAX_PARAGRAPHS, MAX_WORDS, MAX_CHARS)) -> ShapedDocument:
    P, W, C = dims
    k = int(n_paragraphs) if n_paragraphs is not None else int(rng.integers(1, P + 1))
    words = np.zeros((P, W), dtype=np.int64)
    chars = np.zeros((P, W, C), dtype=np.int64)
    counts = np.zeros(P, dtype=np.int64)
    for i in range(k):
        L = int(rng.integers(1, max_len + 1))
        counts[i] = L
        words[i, :L] = rng.integers(1, n_words, L)
        for t in range(L):
            n = int(rng.integers(1, C + 1))
            chars[i, t, :n] = rng.integers(1, n_chars, n)
    return ShapedDocument(doc_id, words, chars, k, counts, label)


def _pseudo_words(rng: np.random.Generator, n: int) -> list[str]:
    letters = np.array(list(string.ascii_lowercase))
    out = set()
    while len(out) < n:
        out.add("".join(rng.choice(letters, size=int(rng.integers(3, 8)))))
    return sorted(out - set(MARKERS))


def _sentence(rng, vocab, n_words, capitalize_all=False) -> str:
    words = list(rng.choice(vocab, size=n_words))
    if capitalize_all:
        words = [w.capitalize() for w in words]
    else:
        words[0] = words[0].capitalize()
    return " ".join(words) + "."


def planted_marker_corpus(n_docs: int = 40, seed: int = 0, n_paragraphs=(2, 4),
                          sentence_words=(4, 8)) -> list[RawDocument]:
    """Half satire, half true; each satire document hides a marker token in one paragraph."""
    rng = np.random.default_rng(seed)
    vocab = _pseudo_words(rng, 60)
    docs = []
    for j in range(n_docs):
        satire = j % 2 == 0
        k = int(rng.integers(n_paragraphs[0], n_paragraphs[1] + 1))
        paragraphs = [_sentence(rng, vocab, int(rng.integers(*sentence_words)))
                      for _ in range(k)]
        if satire:
            i = int(rng.integers(k))
            words = paragraphs[i][:-1].split()
            words.insert(int(rng.integers(1, len(words) + 1)), str(rng.choice(MARKERS)))
            paragraphs[i] = " ".join(words) + "."
        docs.append(RawDocument(f"m{j:03d}", "satire-site" if satire else "news-site",
                                Label.SATIRE if satire else Label.TRUE_NEWS, tuple(paragraphs)))
    return docs


def structural_signal_corpus(n_docs: int = 40, seed: int = 0, n_paragraphs=(2, 4),
                             visible_words: int = 16, tail_words: int = 8) -> list[RawDocument]:
    """Documents whose label is readable only by combining paragraph
    features with attention.

    Every document has exactly one paragraph carrying a marker token within
    its first ``visible_words`` tokens, plus unmarked paragraphs, so the
    visible token content has the same distribution in both classes. One
    paragraph also gets a tail of numbers past the visible window: in
    satire documents it is the marked paragraph, in true documents an
    unmarked one. With the model's word cap at ``visible_words`` the tail is
    seen only through paragraph features (digit counts, CD tags), which can
    steer attention toward the marked paragraph or away from it.
    """
    rng = np.random.default_rng(seed)
    vocab = _pseudo_words(rng, 60)
    docs = []
    for j in range(n_docs):
        satire = j % 2 == 0
        k = int(rng.integers(max(n_paragraphs[0], 2), n_paragraphs[1] + 1))
        marked = int(rng.integers(k))
        others = [i for i in range(k) if i != marked]
        loud = marked if satire else int(rng.choice(others))
        paragraphs = []
        for i in range(k):
            head = list(rng.choice(vocab, size=visible_words))
            if i == marked:
                head[int(rng.integers(1, visible_words))] = MARKERS[0]
            head[0] = head[0].capitalize()
            if i == loud:
                tail = [str(int(x)) for x in rng.integers(10, 10000, size=tail_words)]
            else:
                tail = list(rng.choice(vocab, size=tail_words))
            paragraphs.append(" ".join(head + tail) + ".")
        docs.append(RawDocument(f"s{j:03d}", "satire-site" if satire else "news-site",
                                Label.SATIRE if satire else Label.TRUE_NEWS, tuple(paragraphs)))
    return docs


def news_like_corpus(n_docs: int, seed: int = 0) -> list[RawDocument]:
    """Varied text with punctuation, digits and capitals for feature statistics."""
    rng = np.random.default_rng(seed)
    vocab = _pseudo_words(rng, 200) + ["the", "said", "was", "people", "we", "they", "good",
                                        "bad", "think", "game", "hospital", "told"]
    docs = []
    for j in range(n_docs):
        paras = []
        for _ in range(int(rng.integers(1, 6))):
            sents = []
            for _ in range(int(rng.integers(1, 4))):
                words = list(rng.choice(vocab, size=int(rng.integers(3, 15))))
                words[0] = words[0].capitalize()
                if rng.random() < 0.3:
                    words.insert(int(rng.integers(len(words))), str(int(rng.integers(1, 5000))))
                if rng.random() < 0.3:
                    words[int(rng.integers(len(words)))] += ","
                sents.append(" ".join(words) + str(rng.choice([".", ".", "!", "?"])))
            paras.append(" ".join(sents))
        label = Label.SATIRE if rng.random() < 0.3 else Label.TRUE_NEWS
        docs.append(RawDocument(f"n{j:04d}", f"site{j % 7}", label, tuple(paras)))
    return docs
