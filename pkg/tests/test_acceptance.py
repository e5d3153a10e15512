"""Acceptance suite: one test per headline requirement, each printing a verdict line."""
import json
import math
import time

import numpy as np
import pytest
from scipy import stats

from conftest import random_example, run_grad_check, tiny_model
from hiersatire import numgrad as ng
from hiersatire import synthetic
from hiersatire.analysis import (ImportanceEntry, ImportanceReport, family_importance,
                                 feature_importance, welch_t_test)
from hiersatire.baseline import NGramFeaturizer, balanced_weights, evaluate_linear, train_linear
from hiersatire.checkpoint import Bundle, load_checkpoint, save_checkpoint
from hiersatire.cli import main
from hiersatire.corpus import tokenize_paragraph
from hiersatire.hiernet import VARIANTS, EarlyStopping, HierNet, evaluate, train
from hiersatire.lingfeat import readability_features, stub_lexicon_text
from hiersatire.pipeline import Preprocessor, analyze
from test_baseline import separable_docs
from test_lingfeat import READABILITY_CASES, readability_oracle
from test_numgrad import PRIMITIVES

DEFAULT_SIZE = dict(hidden=60, filters=30, char_embed_dim=30, word_embed_dim=100, mlp_hidden=60)


@pytest.fixture(autouse=True)
def verdict(request, capsys):
    yield
    rep = getattr(request.node, "rep_call", None)
    ok = rep is not None and rep.passed
    label = request.node.function.__doc__.strip().splitlines()[0]
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] {label}")


def prepared(docs, lexicon, schema, tagger, **fit_kw):
    data = analyze(docs, lexicon, tagger, schema=schema)
    pre = Preprocessor.fit(data, schema, **fit_kw)
    return pre, pre.examples(data)


def test_gradient_correctness():
    """gradients: primitives < 1e-6, every variant end to end < 1e-4, under 60 s"""
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    for name, f in PRIMITIVES.items():
        a = ng.Parameter("a", rng.normal(size=(3, 4)))
        b = ng.Parameter("b", rng.normal(size=(3, 4)))
        err = ng.grad_check(lambda: f(a, b), [a, b], h=1e-5)
        assert err < 1e-6, f"{name}: {err:.2e}"
    p = ng.GRUParams.create("g", 3, 4, rng)
    x, h = ng.Parameter("x", rng.normal(size=3)), ng.Parameter("h", rng.normal(size=4))
    assert ng.grad_check(lambda: ng.total(ng.gru_step(x, h, p)), [x, h, *p.tensors], h=1e-5) < 1e-6

    for variant in VARIANTS:
        model = tiny_model(variant, seed=1, **DEFAULT_SIZE)
        ex = random_example(np.random.default_rng(1), 3, max_len=5)
        err = run_grad_check(model, ex, max_coords=40)
        assert err < 1e-4, f"{variant}: {err:.2e}"
    assert time.perf_counter() - start < 60.0


def test_attention_invariants():
    """attention: sums to 1, non-negative, zero on padding, padding leaves output unchanged"""
    rng = np.random.default_rng(2024)
    models = {v: tiny_model(v, seed=3) for v in VARIANTS}
    for j in range(100):
        model = models[VARIANTS[j % 4]]
        ex = random_example(rng, doc_id=f"d{j}")
        k = ex.doc.paragraph_count
        padded = model.forward(ex, trim=False)
        a = padded.alpha_padded
        assert abs(a.sum() - 1.0) < 1e-9
        assert (a >= 0).all() and not a[k:].any()
        trimmed = model.forward(ex, trim=True)
        assert abs(float(padded.prob.data[0]) - float(trimmed.prob.data[0])) < 1e-12


def test_equation_fidelity():
    """equations: 2-d GRU hand trace, uniform attention at v=0, feature-free attention at U=0"""
    p = ng.GRUParams.create("g", 2, 2)
    for t in p.tensors:
        t.data[...] = 0.0
    p.Wz.data[...] = p.Wr.data[...] = p.Wh.data[...] = np.eye(2)
    x, h = np.array([0.1, -0.2]), np.array([0.5, 0.5])
    # high-precision values, frozen
    expected = np.array([0.28983402909639466, 0.18606533972142428])
    np.testing.assert_allclose(ng.gru_step(x, h, p).data, expected, rtol=0, atol=1e-12)
    by_hand = [(1 - 1 / (1 + math.exp(-xi))) * 0.5 + math.tanh(xi) / (1 + math.exp(-xi)) for xi in x]
    np.testing.assert_allclose(expected, by_hand, rtol=0, atol=1e-15)

    model = tiny_model("4LHNP", seed=2)
    ex = random_example(np.random.default_rng(5), 4)
    model["attn.v"].data[...] = 0.0
    np.testing.assert_array_equal(model.forward(ex).alpha, np.full(4, 0.25))

    with_feats = tiny_model("4LHNP", seed=2)
    with_feats["attn.U"].data[...] = 0.0
    plain = tiny_model("4LHN", seed=2)
    for name in plain.params:
        plain[name].data[...] = with_feats[name].data
    states = ng.Tensor(np.random.default_rng(6).normal(size=(4, 16)))
    mask = np.ones(4, bool)
    hidden = with_feats.paragraph_feature_mlp(np.random.default_rng(7).normal(size=(4, 7)))
    a1, d1 = with_feats.attend(states, mask, hidden)
    a2, d2 = plain.attend(states, mask)
    assert a1.data.tobytes() == a2.data.tobytes()
    assert d1.data.tobytes() == d2.data.tobytes()


def test_readability_oracle():
    """readability: five reference texts match hand counts to 1e-9"""
    for text, counts in READABILITY_CASES.items():
        got = readability_features(tokenize_paragraph(text).sentences)
        np.testing.assert_allclose(got, readability_oracle(*counts), rtol=0, atol=1e-9)
    fre, _, ari, _, _ = readability_features(tokenize_paragraph("The cat sat.").sentences)
    assert round(fre, 2) == 119.19 and round(ari, 2) == -5.80


def test_overfit(lexicon, schema, tagger):
    """overfit: token signal (4LHN, 50 epochs) and feature-only signal (4LHNP, 100 epochs)"""
    start = time.perf_counter()
    pre, exs = prepared(synthetic.planted_marker_corpus(40, seed=0), lexicon, schema, tagger)
    model = HierNet(pre.model_config(variant="4LHN", seed=0, dropout=0.0))
    train(model, exs, exs, max_epochs=50, patience=50, target_f1=1.0)
    assert evaluate(model, exs).f1 == 1.0
    assert time.perf_counter() - start < 300.0

    pre, exs = prepared(synthetic.structural_signal_corpus(40, seed=0), lexicon, schema, tagger,
                        max_words=16)
    model = HierNet(pre.model_config(variant="4LHNP", seed=0, dropout=0.0))
    train(model, exs, exs, max_epochs=100, patience=100, target_f1=1.0)
    assert evaluate(model, exs).f1 == 1.0


def test_early_stopping():
    """early stopping: stops on the fifth consecutive drop and restores the best epoch"""
    stopper = EarlyStopping(patience=5)
    params = {"w": np.zeros(1)}
    stopped = None
    for epoch, f1 in enumerate([.5, .6, .59, .58, .57, .56, .55], 1):
        params["w"][0] = epoch
        if stopper.update(f1, lambda: {k: v.copy() for k, v in params.items()}):
            stopped = epoch
            break
    assert stopped == 7
    assert stopper.best_epoch == 2 and stopper.best_state["w"][0] == 2.0


def test_importance_formula():
    """importance: mean absolute first-layer weight, family means and max scaling"""
    np.testing.assert_array_equal(feature_importance([[1, -2], [3, 4]]), [1.5, 3.5])
    rows = [("a1", "psycholinguistic", "paragraph", 1.0), ("a2", "psycholinguistic", "paragraph", 3.0),
            ("b1", "structural", "paragraph", 4.0), ("a1", "psycholinguistic", "document", 0.5),
            ("a2", "psycholinguistic", "document", 0.5), ("b1", "structural", "document", 8.0)]
    fam = family_importance(ImportanceReport([ImportanceEntry(*r) for r in rows]))
    assert fam["paragraph"]["psycholinguistic"]["mean"] == 2.0
    assert fam["document"]["structural"]["scaled"] == 1.0
    assert fam["paragraph"]["structural"]["scaled"] == 0.5
    assert fam["document"]["psycholinguistic"]["scaled"] == 0.0625


def test_welch():
    """welch: three sample pairs agree with scipy to 1e-3 in t and p"""
    pairs = [([1, 2, 3], [4, 5, 6]), ([2.1, 3.3, 1.9, 4.4, 5.0], [1.0, 0.5, 1.2]),
             ([10, 12, 9, 11, 13, 10], [8, 9, 7, 10, 8.5, 9.5, 7.5])]
    for a, b in pairs:
        ref = stats.ttest_ind(a, b, equal_var=False)
        t, p = welch_t_test(a, b)
        assert abs(t - ref.statistic) < 1e-3 and abs(p - ref.pvalue) < 1e-3
    t, p = welch_t_test([1, 2, 3], [4, 5, 6])
    assert abs(t + 3.674) < 1e-3 and abs(p - 0.0214) < 1e-3


def test_baseline():
    """baseline: separable 20-document set reaches F1 = 1, balanced weights sum to N"""
    docs, y = separable_docs(20)
    X = NGramFeaturizer(char_orders=(), min_df=2).fit(docs).transform(docs)
    assert evaluate_linear(train_linear(X, y, C=0.1), X, y).f1 == 1.0
    for neg, pos in [(1, 1), (9, 1), (99, 1)]:
        labels = [0] * neg + [1] * pos
        assert abs(balanced_weights(labels).sum() - len(labels)) < 1e-9


def test_determinism_and_persistence(cli_workspace, lexicon, schema, tagger, tmp_path):
    """determinism: identical seeded runs, bit-exact checkpoint round trip"""
    w = cli_workspace
    small = ["--hidden", "6", "--filters", "4", "--char-embed-dim", "4",
             "--word-embed-dim", "5", "--max-epochs", "2", "--tagger-epochs", "2"]
    blobs = []
    for run in ("a", "b"):
        code = main(["train", "--variant", "4LHNPD", "--corpus", str(w["corpus"]),
                     "--split", str(w["split"]), "--lexicon", str(w["lexicon"]), "--seed", "7",
                     "--out", str(w["dir"] / run), *small])
        assert code == 0
        blobs.append((w["dir"] / run / "metrics.json").read_bytes())
    assert blobs[0] == blobs[1]
    assert json.loads(blobs[0])["seed"] == 7

    pre, exs = prepared(synthetic.planted_marker_corpus(10, seed=1), lexicon, schema, tagger)
    model = HierNet(pre.model_config(variant="4LHNPD", seed=5, hidden=8, filters=5,
                                     char_embed_dim=4, word_embed_dim=6))
    for p in model.parameters:
        p.data += np.random.default_rng(0).normal(0, 0.05, p.shape)
    save_checkpoint(Bundle(model, pre, stub_lexicon_text(), tagger, {"seed": 5}), tmp_path / "m.bin")
    again = load_checkpoint(tmp_path / "m.bin").model
    for name, arr in model.state_dict().items():
        assert arr.tobytes() == again.state_dict()[name].tobytes(), name
    assert evaluate(again, exs) == evaluate(model, exs)
    assert [again.predict_proba(e) for e in exs] == [model.predict_proba(e) for e in exs]


def test_scaler_contract(lexicon, schema, tagger):
    """scaler: training features standardized per non-degenerate column on 1000 documents"""
    data = analyze(synthetic.news_like_corpus(1000, seed=0), lexicon, tagger, schema=schema)
    pre = Preprocessor.fit(data, schema)
    exs = pre.examples(data)
    for raw, scaled in [(np.vstack([d.para_features for d in data]),
                         np.vstack([e.para_features for e in exs])),
                        (np.vstack([d.doc_features for d in data]),
                         np.vstack([e.doc_features for e in exs]))]:
        live = raw.std(axis=0) > 0
        assert live.sum() > 10
        assert np.abs(scaled[:, live].mean(axis=0)).max() < 1e-9
        assert np.abs(scaled[:, live].std(axis=0) - 1.0).max() < 1e-9
        np.testing.assert_array_equal(scaled[:, ~live], 0.0)
