import numpy as np
import pytest

from hiersatire import synthetic
from hiersatire.hiernet import HierNet, evaluate, train
from hiersatire.pipeline import Preprocessor, analyze


@pytest.mark.slow
class TestFeatureSteeredAttention:
    """Held-out check that paragraph features reach the attention scores.

    The visible tokens carry no class signal on their own, so a model
    without the feature pathway cannot beat chance on unseen documents.
    """

    def test_features_generalize(self, lexicon, schema, tagger):
        def prep(n, seed):
            return analyze(synthetic.structural_signal_corpus(n, seed=seed), lexicon, tagger,
                           schema=schema)

        train_data, held_out = prep(200, 0), prep(100, 1000)
        pre = Preprocessor.fit(train_data, schema, max_words=16)
        tr, te = pre.examples(train_data), pre.examples(held_out)
        acc = {}
        for variant in ("4LHN", "4LHNP"):
            model = HierNet(pre.model_config(variant=variant, seed=0, dropout=0.0, hidden=16,
                                             filters=8, char_embed_dim=8, word_embed_dim=16,
                                             mlp_hidden=16))
            train(model, tr, tr, max_epochs=15, patience=15)
            acc[variant] = evaluate(model, te).accuracy
        assert acc["4LHNP"] > 0.85
        assert acc["4LHN"] < 0.7
        assert acc["4LHNP"] - acc["4LHN"] > 0.2
