from dataclasses import replace

import numpy as np
import pytest

from conftest import random_example, run_grad_check, tiny_model
from hiersatire import numgrad as ng
from hiersatire.corpus import Vocabulary
from hiersatire.errors import ConfigError, DataError
from hiersatire.hiernet import (VARIANTS, EarlyStopping, HierNet, ModelConfig,
                                compute_metrics, evaluate, load_embeddings, train)

FEATURE_PATH = ("attn.U", "para_mlp.", "doc_mlp.", "cls.U")


def zero_feature_path(model):
    for name, p in model.params.items():
        if name.startswith(FEATURE_PATH):
            p.data[...] = 0.0


class TestConfig:
    def test_unknown_variant(self):
        with pytest.raises(ConfigError, match="unknown variant"):
            ModelConfig(variant="5LHN")

    def test_features_required(self):
        with pytest.raises(ConfigError, match="n_para_features"):
            ModelConfig(variant="4LHNP")

    def test_missing_features_at_forward(self):
        m = tiny_model("4LHND")
        ex = random_example(np.random.default_rng(0), 2)
        with pytest.raises(ConfigError, match="document features"):
            m.forward(replace(ex, doc_features=None))

    def test_attend_rejects_stray_features(self):
        m = tiny_model("4LHN")
        states = ng.Tensor(np.zeros((2, 16)))
        with pytest.raises(ConfigError):
            m.attend(states, np.ones(2, bool), ng.Tensor(np.zeros((2, 5))))


class TestCharEncoder:
    def test_zero_filters_give_zero(self):
        m = tiny_model("4LHN")
        m["char_cnn.W"].data[...] = 0.0
        m["char_cnn.b"].data[...] = 0.0
        out = m.encode_word_chars(np.array([[3, 4, 5, 0, 0, 0] + [0] * 18]))
        np.testing.assert_array_equal(out.data, 0.0)

    def test_padding_word_is_constant(self):
        m = tiny_model("4LHN")
        pad = np.zeros((2, 24), dtype=np.int64)
        out = m.encode_word_chars(pad).data
        np.testing.assert_array_equal(out[0], out[1])


class TestParagraphEncoder:
    def test_reversal_swaps_ends(self):
        m = tiny_model("4LHN")
        a, b = np.random.default_rng(0).normal(size=(2, 11))
        zero = np.zeros(m.config.hidden)

        def brute(first, second):
            fwd = ng.gru_step(second, ng.gru_step(first, zero, m.word_fwd), m.word_fwd).data
            bwd = ng.gru_step(first, ng.gru_step(second, zero, m.word_bwd), m.word_bwd).data
            return np.concatenate([fwd, bwd])

        for first, second in ((a, b), (b, a)):
            got = m.encode_paragraphs(ng.Tensor(np.stack([first, second])[None]), np.array([2]))
            np.testing.assert_allclose(got.data[0], brute(first, second), rtol=0, atol=1e-14)
        ab = m.encode_paragraphs(ng.Tensor(np.stack([a, b])[None]), np.array([2])).data[0]
        ba = m.encode_paragraphs(ng.Tensor(np.stack([b, a])[None]), np.array([2])).data[0]
        assert not np.allclose(ab, ba)

    def test_empty_paragraph_is_zero(self):
        m = tiny_model("4LHN")
        X = ng.Tensor(np.random.default_rng(0).normal(size=(1, 3, 11)))
        np.testing.assert_array_equal(m.encode_paragraphs(X, np.array([0])).data, 0.0)


class TestAttention:
    def test_single_paragraph(self):
        m = tiny_model("4LHN")
        out = m.forward(random_example(np.random.default_rng(1), 1))
        np.testing.assert_array_equal(out.alpha, [1.0])

    def test_identical_paragraphs(self):
        m = tiny_model("4LHN")
        states = ng.Tensor(np.tile(np.random.default_rng(0).normal(size=16), (2, 1)))
        alpha, d = m.attend(states, np.ones(2, bool))
        np.testing.assert_allclose(alpha.data, [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(d.data, states.data[0], atol=1e-15)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_zero_score_vector_is_uniform(self, variant):
        m = tiny_model(variant)
        m["attn.v"].data[...] = 0.0
        out = m.forward(random_example(np.random.default_rng(2), 5))
        np.testing.assert_array_equal(out.alpha, np.full(5, 0.2))

    @pytest.mark.parametrize("seed", range(5))
    def test_normalized(self, seed):
        m = tiny_model("4LHNPD", seed=seed)
        ex = random_example(np.random.default_rng(seed))
        out = m.forward(ex, trim=False)
        k = ex.doc.paragraph_count
        assert abs(out.alpha_padded.sum() - 1.0) < 1e-9
        assert (out.alpha_padded >= 0).all()
        assert not out.alpha_padded[k:].any()


class TestClassifier:
    def test_zero_weights_half(self):
        m = tiny_model("4LHNPD")
        for p in m.parameters:
            p.data[...] = 0.0
        assert m.predict_proba(random_example(np.random.default_rng(0), 3)) == 0.5

    @pytest.mark.parametrize("seed", range(4))
    def test_variant_consistency(self, seed):
        full = tiny_model("4LHNPD", seed=seed)
        zero_feature_path(full)
        base = HierNet(replace(full.config, variant="4LHN"))
        base.load_state({k: v for k, v in full.state_dict().items() if k in base.params})
        ex = random_example(np.random.default_rng(seed), 4)
        assert full.predict_proba(ex) == base.predict_proba(ex)

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_padding_invariance(self, variant):
        m = tiny_model(variant)
        ex = random_example(np.random.default_rng(7), 3)
        trimmed = m.predict_proba(ex)
        padded = float(m.forward(ex, trim=False).prob.data[0])
        assert abs(trimmed - padded) < 1e-12


class TestGradients:
    """End-to-end finite differences on a small network, dropout off."""

    @pytest.mark.parametrize("variant", VARIANTS)
    def test_variant(self, variant):
        m = tiny_model(variant, seed=1)
        ex = random_example(np.random.default_rng(1), 3, max_len=5)
        assert run_grad_check(m, ex, max_coords=25) < 1e-4


class TestState:
    def test_load_state_names_missing_array(self):
        m = tiny_model("4LHN")
        state = m.state_dict()
        state.pop("attn.v")
        with pytest.raises(DataError, match="attn.v"):
            m.load_state(state)

    def test_load_state_rejects_extra_array(self):
        m = tiny_model("4LHN")
        state = dict(m.state_dict(), **{"para_mlp.W1": np.zeros((7, 5))})
        with pytest.raises(DataError, match="para_mlp.W1"):
            m.load_state(state)


class TestEmbeddings:
    def test_loads_known_words(self, tmp_path):
        v = Vocabulary({"cat": 2, "dog": 3}, {})
        p = tmp_path / "e.txt"
        p.write_text("cat 1 2 3\nzebra 4 5 6\nDog 7 8 9\n")
        rows = load_embeddings(p, v, dim=3)
        assert sorted(rows) == [2, 3]
        np.testing.assert_array_equal(rows[2], [1, 2, 3])
        np.testing.assert_array_equal(rows[3], [7, 8, 9])

    def test_bad_dimension(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("cat 1 2\n")
        with pytest.raises(DataError):
            load_embeddings(p, Vocabulary({"cat": 2}, {}), dim=3)


class TestMetrics:
    def test_perfect(self):
        m = compute_metrics([1, 0], [1, 0])
        assert (m.accuracy, m.precision, m.recall, m.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_false_positive(self):
        m = compute_metrics([1, 1], [1, 0])
        assert m.precision == 0.5 and m.recall == 1.0 and m.accuracy == 0.5
        np.testing.assert_allclose(m.f1, 2 / 3)

    def test_empty_denominators(self):
        m = compute_metrics([0, 0], [0, 0])
        assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)

    def test_empty_list(self):
        with pytest.raises(DataError):
            evaluate(tiny_model("4LHN"), [])


class TestEarlyStopping:
    def trace(self, history, patience=5):
        s = EarlyStopping(patience)
        for epoch, f1 in enumerate(history, 1):
            if s.update(f1, lambda e=epoch: f"params@{e}"):
                return epoch, s
        return len(history), s

    def test_five_drops(self):
        stopped, s = self.trace([.5, .6, .59, .58, .57, .56, .55])
        assert stopped == 7
        assert s.best_epoch == 2 and s.best_state == "params@2"

    def test_never_drops(self):
        stopped, s = self.trace([.1, .2, .2, .3])
        assert stopped == 4 and s.best_epoch == 4

    def test_plateau_resets_count(self):
        stopped, _ = self.trace([.9, .8, .7, .7, .6, .5, .4, .3, .2])
        assert stopped == 9

    def test_empty_training_set(self):
        with pytest.raises(DataError):
            train(tiny_model("4LHN"), [], [random_example(np.random.default_rng(0), 1)])

    def test_same_seed_same_history(self):
        rng = np.random.default_rng(3)
        exs = [random_example(rng, 2, label=j % 2, doc_id=str(j)) for j in range(6)]
        runs = []
        for _ in range(2):
            m = tiny_model("4LHNPD", seed=4)
            h = train(m, exs, exs, max_epochs=3)
            runs.append((h.f1, h.loss, m.state_dict()))
        assert runs[0][0] == runs[1][0] and runs[0][1] == runs[1][1]
        for k in runs[0][2]:
            np.testing.assert_array_equal(runs[0][2][k], runs[1][2][k])
