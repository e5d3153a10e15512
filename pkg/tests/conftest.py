import json
from dataclasses import replace

import numpy as np
import pytest

from hiersatire import numgrad as ng
from hiersatire import postag, synthetic
from hiersatire.corpus import write_corpus
from hiersatire.hiernet import Example, HierNet, ModelConfig
from hiersatire.lingfeat import FeatureSchema, Lexicon, stub_lexicon_text


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-second training runs")


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.stub()


@pytest.fixture(scope="session")
def schema(lexicon):
    return FeatureSchema.build(lexicon)


@pytest.fixture(scope="session")
def tagger():
    return postag.default_tagger()


N_FEAT = 7


def tiny_model(variant="4LHNPD", seed=0, scale=0.1, **overrides):
    """Small network with every parameter nudged off its init (biases included)."""
    cfg = dict(variant=variant, n_chars=20, n_words=30, n_para_features=N_FEAT,
               n_doc_features=N_FEAT, seed=seed, dropout=0.0, hidden=8, filters=5,
               char_embed_dim=4, word_embed_dim=6, mlp_hidden=5)
    cfg.update(overrides)
    model = HierNet(ModelConfig(**cfg))
    rng = np.random.default_rng([seed, 99])
    for p in model.parameters:
        p.data += rng.normal(0.0, scale, p.shape)
    return model


def random_example(rng, n_paragraphs=None, max_len=6, label=1, doc_id="synthetic"):
    doc = synthetic.random_shaped_document(rng, n_paragraphs=n_paragraphs, max_len=max_len,
                                           label=label, doc_id=doc_id)
    k = doc.paragraph_count
    return Example(doc, rng.normal(size=(k, N_FEAT)), rng.normal(size=N_FEAT))


@pytest.fixture
def cli_workspace(tmp_path):
    """A 24-document corpus, a three-way source split and the stub lexicon on disk."""
    docs = [replace(d, source=("sat" if d.label else "news") + str(j // 2 % 3))
            for j, d in enumerate(synthetic.planted_marker_corpus(24, seed=3))]
    corpus = tmp_path / "c.jsonl"
    write_corpus(docs, corpus)
    split = tmp_path / "s.json"
    split.write_text(json.dumps({f"{kind}{i}": part for kind in ("sat", "news")
                                 for i, part in enumerate(("train", "validation", "test"))}))
    lex = tmp_path / "l.dic"
    lex.write_text(stub_lexicon_text(), encoding="utf-8")
    return {"dir": tmp_path, "corpus": corpus, "split": split, "lexicon": lex, "docs": docs}


def run_grad_check(model, ex, max_coords=40, h=1e-4):
    return ng.grad_check(lambda: model.loss(ex, training=False), model.parameters,
                         h=h, max_coords=max_coords)


@pytest.hookimpl(wrapper=True, tryfirst=True)
def pytest_runtest_makereport(item, call):
    rep = yield
    setattr(item, f"rep_{rep.when}", rep)
    return rep
