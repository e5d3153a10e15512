"""Character CNN -> word Bi-GRU -> paragraph Bi-GRU + attention -> document classifier."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .. import numgrad as ng
from ..corpus import ShapedDocument
from ..errors import ConfigError, DataError
from ..numgrad.init import glorot, small_uniform

VARIANTS = ("4LHN", "4LHNP", "4LHND", "4LHNPD")


@dataclass
class ModelConfig:
    variant: str = "4LHNPD"
    char_embed_dim: int = 30
    word_embed_dim: int = 100
    filters: int = 30
    window: int = 3
    hidden: int = 60
    max_chars: int = 24
    max_words: int = 128
    max_paragraphs: int = 16
    dropout: float = 0.5
    seed: int = 0
    mlp_hidden: int = 60
    # Sizes fixed by the data at build time.
    n_chars: int = 2
    n_words: int = 2
    n_para_features: int = 0
    n_doc_features: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        for f in ("char_embed_dim", "word_embed_dim", "filters", "window", "hidden",
                  "max_chars", "max_words", "max_paragraphs", "mlp_hidden", "n_chars", "n_words"):
            if getattr(self, f) <= 0:
                raise ConfigError(f"{f} must be positive")
        if self.window > self.max_chars:
            raise ConfigError("convolution window longer than the character span")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.paragraph_features and self.n_para_features <= 0:
            raise ConfigError(f"{self.variant} needs n_para_features > 0")
        if self.document_features and self.n_doc_features <= 0:
            raise ConfigError(f"{self.variant} needs n_doc_features > 0")

    @property
    def paragraph_features(self) -> bool:
        return self.variant in ("4LHNP", "4LHNPD")

    @property
    def document_features(self) -> bool:
        return self.variant in ("4LHND", "4LHNPD")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in obj.items() if k in names})


@dataclass
class Example:
    """A shaped document plus its scaled feature inputs (when the variant uses them)."""

    doc: ShapedDocument
    para_features: np.ndarray | None = None  # (paragraph_count, K)
    doc_features: np.ndarray | None = None   # (K,)

    @property
    def id(self) -> str:
        return self.doc.id

    @property
    def label(self) -> int:
        return self.doc.label


@dataclass
class AttentionRecord:
    doc_id: str
    alpha: np.ndarray

    @property
    def scaled(self) -> np.ndarray:
        return self.alpha / self.alpha.max()


@dataclass
class ForwardResult:
    prob: ng.Tensor          # shape (1,)
    alpha: np.ndarray        # over true paragraphs
    alpha_padded: np.ndarray  # over every row that entered attention
    extras: dict = field(default_factory=dict)


class HierNet:
    def __init__(self, config: ModelConfig, pretrained: dict[int, np.ndarray] | None = None):
        self.config = cfg = config
        rng = np.random.default_rng([cfg.seed, 0])
        H, F = cfg.hidden, cfg.filters
        para_dim = 2 * H
        params: dict[str, ng.Parameter] = {}

        def add(name, value, **kw):
            params[name] = ng.Parameter(name, value, **kw)
            return params[name]

        add("char_emb", small_uniform(rng, (cfg.n_chars, cfg.char_embed_dim)), row_sparse=True)
        word_emb = small_uniform(rng, (cfg.n_words, cfg.word_embed_dim))
        for idx, vec in (pretrained or {}).items():
            word_emb[idx] = vec
        add("word_emb", word_emb, row_sparse=True)
        add("char_cnn.W", glorot(rng, cfg.window * cfg.char_embed_dim, F))
        add("char_cnn.b", np.zeros(F))
        word_in = F + cfg.word_embed_dim
        self.word_fwd = ng.GRUParams.create("word_gru.fwd", word_in, H, rng)
        self.word_bwd = ng.GRUParams.create("word_gru.bwd", word_in, H, rng)
        self.para_fwd = ng.GRUParams.create("para_gru.fwd", para_dim, H, rng)
        self.para_bwd = ng.GRUParams.create("para_gru.bwd", para_dim, H, rng)
        for g in (self.word_fwd, self.word_bwd, self.para_fwd, self.para_bwd):
            for t in g.tensors:
                params[t.name] = t
        add("attn.W", glorot(rng, para_dim, H))
        add("attn.b", np.zeros(H))
        add("attn.v", glorot(rng, H, 1)[:, 0])
        M = cfg.mlp_hidden
        if cfg.paragraph_features:
            add("attn.U", glorot(rng, M, H))
            add("para_mlp.W1", glorot(rng, cfg.n_para_features, M))
            add("para_mlp.b1", np.zeros(M))
            add("para_mlp.W2", glorot(rng, M, M))
            add("para_mlp.b2", np.zeros(M))
        if cfg.document_features:
            add("doc_mlp.W1", glorot(rng, cfg.n_doc_features, M))
            add("doc_mlp.b1", np.zeros(M))
            add("doc_mlp.W2", glorot(rng, M, M))
            add("doc_mlp.b2", np.zeros(M))
            add("cls.U", glorot(rng, M, 1)[:, 0])
        add("cls.W", glorot(rng, para_dim, 1)[:, 0])
        add("cls.b", np.zeros(1))
        self.params = params

    def __getitem__(self, name: str) -> ng.Parameter:
        return self.params[name]

    @property
    def parameters(self) -> list[ng.Parameter]:
        return list(self.params.values())

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        extra = sorted(set(state) - set(self.params))
        if extra:
            raise DataError(f"array {extra[0]!r} is not part of variant {self.config.variant}")
        missing = sorted(set(self.params) - set(state))
        if missing:
            raise DataError(f"array {missing[0]!r} missing for variant {self.config.variant}")
        for k, v in state.items():
            p = self.params[k]
            if p.data.shape != v.shape:
                raise DataError(f"array {k!r} has shape {v.shape}, expected {p.data.shape}")
            p.data[...] = v

    # -- levels ----------------------------------------------------------------

    def encode_word_chars(self, char_indices: np.ndarray) -> ng.Tensor:
        """Character CNN for ``(N, C)`` indices -> ``(N, filters)``.

        Valid (unpadded-window) convolution, bias, tanh, then max over positions.
        """
        char_indices = np.asarray(char_indices)
        n, C = char_indices.shape
        w = self.config.window
        E = ng.embedding_lookup(self["char_emb"], char_indices)         # (N, C, e)
        windows = ng.concat([E[:, j:C - w + 1 + j, :] for j in range(w)], axis=-1)
        conv = ng.tanh(windows @ self["char_cnn.W"] + self["char_cnn.b"])  # (N, C-w+1, F)
        return ng.max_over_time(conv, axis=1)

    def word_inputs(self, words: np.ndarray, chars: np.ndarray, counts: np.ndarray) -> ng.Tensor:
        """``[x^c ; x^e]`` for every position, ``(P, W, filters + word_dim)``.

        The char CNN runs only on real words; padded positions get zeros.
        """
        P, W = words.shape
        valid = np.arange(W)[None, :] < counts[:, None]
        n_valid = int(valid.sum())
        gather = np.zeros((P, W), dtype=np.int64)
        gather[valid] = np.arange(1, n_valid + 1)
        if n_valid:
            xc = self.encode_word_chars(chars[valid])
            padded = ng.concat([np.zeros((1, self.config.filters)), xc], axis=0)
            xc_full = padded[gather]
        else:
            xc_full = ng.Tensor(np.zeros((P, W, self.config.filters)))
        xe = ng.embedding_lookup(self["word_emb"], words)
        return ng.concat([xc_full, xe], axis=-1)

    def encode_paragraphs(self, X: ng.Tensor, counts: np.ndarray) -> ng.Tensor:
        """Last forward state and first backward state per paragraph, ``(P, 2H)``."""
        counts = np.asarray(counts, dtype=np.int64)
        Hf = ng.gru_sequence(X, counts, self.word_fwd)
        Hb = ng.gru_sequence(X, counts, self.word_bwd, reverse=True)
        rows = np.arange(X.shape[0])
        last = np.maximum(counts - 1, 0)
        return ng.concat([Hf[rows, last], Hb[rows, np.zeros_like(last)]], axis=-1)

    def encode_document(self, para_reps: ng.Tensor, paragraph_count: int) -> ng.Tensor:
        """Per-position Bi-GRU states over paragraphs, ``(P, 2H)``."""
        P = para_reps.shape[0]
        seq = ng.reshape(para_reps, (1, P, para_reps.shape[1]))
        lengths = np.array([paragraph_count])
        Hf = ng.gru_sequence(seq, lengths, self.para_fwd)
        Hb = ng.gru_sequence(seq, lengths, self.para_bwd, reverse=True)
        return ng.concat([Hf[0], Hb[0]], axis=-1)

    def paragraph_feature_mlp(self, feats) -> ng.Tensor:
        h = ng.tanh(ng.as_tensor(feats) @ self["para_mlp.W1"] + self["para_mlp.b1"])
        return h @ self["para_mlp.W2"] + self["para_mlp.b2"]

    def document_feature_mlp(self, feats) -> ng.Tensor:
        h = ng.tanh(ng.as_tensor(feats) @ self["doc_mlp.W1"] + self["doc_mlp.b1"])
        return h @ self["doc_mlp.W2"] + self["doc_mlp.b2"]

    def attend(self, states: ng.Tensor, mask: np.ndarray, para_hidden: ng.Tensor | None = None):
        """Attention weights over paragraphs and the weighted document vector.

        ``para_hidden`` is the paragraph feature-MLP output; it is required
        exactly when the variant uses paragraph features.
        """
        if (para_hidden is not None) != self.config.paragraph_features:
            raise ConfigError(f"variant {self.config.variant} "
                              f"{'requires' if self.config.paragraph_features else 'forbids'} "
                              "paragraph features")
        pre = states @ self["attn.W"]
        if para_hidden is not None:
            pre = pre + para_hidden @ self["attn.U"]
        u = ng.tanh(pre + self["attn.b"])
        alpha = ng.softmax(u @ self["attn.v"], mask=mask)
        return alpha, alpha @ states

    def classify(self, d: ng.Tensor, doc_hidden: ng.Tensor | None = None,
                 training: bool = False, rng=None) -> ng.Tensor:
        if (doc_hidden is not None) != self.config.document_features:
            raise ConfigError(f"variant {self.config.variant} "
                              f"{'requires' if self.config.document_features else 'forbids'} "
                              "document features")
        p = self.config.dropout
        if doc_hidden is None:
            x = ng.dropout(d, p, training, rng)
            logit = x @ self["cls.W"] + self["cls.b"]
        else:
            n = d.shape[0]
            x = ng.dropout(ng.concat([d, doc_hidden]), p, training, rng)
            logit = x[:n] @ self["cls.W"] + x[n:] @ self["cls.U"] + self["cls.b"]
        return ng.sigmoid(logit)

    # -- full pass -------------------------------------------------------------

    def forward(self, ex: Example, training: bool = False, rng=None, trim: bool = True) -> ForwardResult:
        """Probability of satire plus attention weights for one document.

        With ``trim`` the arrays are cut to the true paragraph count and the
        longest true paragraph; without it every padded row is carried and
        masked.
        """
        cfg = self.config
        doc = ex.doc
        k = int(doc.paragraph_count)
        if k < 1:
            raise DataError(f"document {doc.id!r} has no paragraphs")
        counts = np.asarray(doc.word_counts, dtype=np.int64)
        if trim:
            rows = k
            width = max(int(counts[:k].max()), 1)
        else:
            rows, width = doc.word_indices.shape
        counts = counts[:rows].copy()
        counts[k:] = 0
        words = doc.word_indices[:rows, :width]
        chars = doc.char_indices[:rows, :width, :]
        X = self.word_inputs(words, chars, counts)
        para_reps = self.encode_paragraphs(X, counts)
        states = self.encode_document(para_reps, k)
        states = ng.dropout(states, cfg.dropout, training, rng)
        mask = np.arange(rows) < k

        para_hidden = None
        if cfg.paragraph_features:
            if ex.para_features is None:
                raise ConfigError(f"variant {cfg.variant} requires paragraph features")
            feats = np.zeros((rows, cfg.n_para_features))
            feats[:k] = ex.para_features[:k]
            para_hidden = self.paragraph_feature_mlp(feats)
        doc_hidden = None
        if cfg.document_features:
            if ex.doc_features is None:
                raise ConfigError(f"variant {cfg.variant} requires document features")
            doc_hidden = self.document_feature_mlp(ex.doc_features)

        alpha, d = self.attend(states, mask, para_hidden)
        prob = self.classify(d, doc_hidden, training, rng)
        return ForwardResult(prob, alpha.data[:k].copy(), alpha.data.copy())

    def loss(self, ex: Example, training: bool = True, rng=None) -> ng.Tensor:
        out = self.forward(ex, training=training, rng=rng)
        return ng.binary_cross_entropy(out.prob, np.array([float(ex.label)]))

    def predict_proba(self, ex: Example) -> float:
        return float(self.forward(ex).prob.data[0])

    def attention(self, ex: Example) -> AttentionRecord:
        return AttentionRecord(ex.id, self.forward(ex).alpha)


def encode_word_chars(char_indices, model: HierNet) -> ng.Tensor:
    return model.encode_word_chars(np.atleast_2d(char_indices))


def load_embeddings(path, vocab, dim: int = 100) -> dict[int, np.ndarray]:
    """Rows of a whitespace-separated text embedding file for words in ``vocab``."""
    found: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip().split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise DataError(f"embedding line {lineno}: expected token and {dim} values, "
                                f"got {len(parts) - 1}")
            idx = vocab.word_to_index.get(parts[0].lower())
            if idx is None or idx in found:
                continue
            try:
                found[idx] = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise DataError(f"embedding line {lineno}: non-numeric value") from None
    return found
