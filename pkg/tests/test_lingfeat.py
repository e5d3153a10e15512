import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hiersatire.corpus import Label, RawDocument, tokenize, tokenize_paragraph
from hiersatire.errors import DataError, FeatureError
from hiersatire.lingfeat import (FAMILIES, FeatureSchema, FeatureScaler, Lexicon, apply_scaler,
                                 count_syllables, extract_all, fit_scaler,
                                 psycholinguistic_features, read_features_csv,
                                 readability_features, structural_features, stylistic_features,
                                 write_features_csv)
from hiersatire.postag import TAGSET

SOCIAL = "%\n1\tSocial\n2\tTalk\n%\nfriend\t1\nthey\t1\ntalk*\t2\n"


def toks(text):
    return tokenize_paragraph(text).tokens


# Hand-counted reference spans: words, sentences, syllables, letters, complex words.
READABILITY_CASES = {
    "The cat sat.": (3, 1, 3, 9, 0),
    "I like dogs. Dogs like me.": (6, 2, 6, 19, 0),
    "Satire is beautiful.": (3, 1, 6, 17, 1),
    "Government officials denied everything yesterday!": (5, 1, 15, 44, 4),
    "Wait. Is it true? Yes, it is.": (7, 3, 7, 19, 0),
}


def readability_oracle(words, sents, syl, letters, complex_words):
    wps, spw = words / sents, syl / words
    return np.array([
        206.835 - 1.015 * wps - 84.6 * spw,
        0.4 * (wps + 100.0 * complex_words / words),
        4.71 * letters / words + 0.5 * wps - 21.43,
        0.0588 * 100.0 * letters / words - 0.296 * 100.0 * sents / words - 15.8,
        spw,
    ])


class TestLexicon:
    def test_parse_header_and_prefix(self):
        lex = Lexicon.parse(SOCIAL)
        assert lex.names == ("Social", "Talk")
        assert lex.match("talking") == (1,)
        assert lex.match("friend") == (0,)
        assert lex.match("friends") == ()

    def test_missing_header(self):
        with pytest.raises(DataError):
            Lexicon.parse("friend\t1\n")

    def test_unknown_category_id(self):
        with pytest.raises(DataError, match="unknown category id 9"):
            Lexicon.parse("%\n1\tA\n%\nx\t9\n")

    def test_stub_lexicon_loads(self, lexicon):
        assert len(lexicon) > 5


class TestPsycholinguistic:
    def test_social_fraction(self):
        lex = Lexicon.parse(SOCIAL)
        t = toks("they met a friend and we sat down to eat")
        np.testing.assert_allclose(psycholinguistic_features(t, lex)[0], 0.2, rtol=0, atol=1e-15)

    def test_prefix_fraction(self):
        lex = Lexicon.parse(SOCIAL)
        np.testing.assert_allclose(psycholinguistic_features(toks("talking talked walk"), lex)[1],
                                   2 / 3)

    def test_punctuation_excluded(self):
        lex = Lexicon.parse(SOCIAL)
        np.testing.assert_allclose(psycholinguistic_features(toks("friend , ! ."), lex), [1.0, 0.0])

    def test_empty(self):
        assert not psycholinguistic_features([], Lexicon.parse(SOCIAL)).any()


class TestStylistic:
    def test_counts(self):
        v = stylistic_features(["NN", "NN", "JJ", "VBZ"])
        expected = np.zeros(len(TAGSET))
        expected[TAGSET.index("NN")] = 0.5
        expected[TAGSET.index("JJ")] = 0.25
        expected[TAGSET.index("VBZ")] = 0.25
        np.testing.assert_array_equal(v, expected)

    def test_empty(self):
        assert not stylistic_features([]).any()

    def test_unknown_tag(self):
        with pytest.raises(FeatureError, match="unknown tag 'XYZ'"):
            stylistic_features(["XYZ"])

    @given(st.lists(st.sampled_from(TAGSET), min_size=1, max_size=50))
    def test_sums_to_one(self, tags):
        v = stylistic_features(tags)
        assert abs(v.sum() - 1.0) < 1e-12
        assert (v <= 1).all()


class TestSyllables:
    @pytest.mark.parametrize("word,n", [("cat", 1), ("satire", 2), ("a", 1), ("table", 2),
                                        ("beautiful", 3), ("42", 1), ("me", 1)])
    def test_examples(self, word, n):
        assert count_syllables(word) == n

    @given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=1, max_size=20))
    def test_at_least_one(self, word):
        assert count_syllables(word) >= 1


class TestReadability:
    """Formula values against hand-counted spans."""

    @pytest.mark.parametrize("text", list(READABILITY_CASES))
    def test_reference_spans(self, text):
        got = readability_features(tokenize_paragraph(text).sentences)
        np.testing.assert_allclose(got, readability_oracle(*READABILITY_CASES[text]),
                                   rtol=0, atol=1e-9)

    def test_the_cat_sat(self):
        fre, fog, ari, _, spw = readability_features(tokenize_paragraph("The cat sat.").sentences)
        assert round(fre, 2) == 119.19
        assert round(ari, 2) == -5.80
        assert spw == 1.0
        np.testing.assert_allclose(fog, 1.2, atol=1e-12)

    def test_empty_span(self):
        with pytest.raises(FeatureError, match="empty span"):
            readability_features([])


class TestStructural:
    def test_hello_world(self):
        p = tokenize_paragraph("Hello, World! 42")
        n_words = sum(t.is_word for t in p.tokens)
        v = structural_features(p.text, n_words, len(p.sentences))
        np.testing.assert_allclose(v, [3, math.log(4), 2, 2, 2, 1])

    def test_empty(self):
        np.testing.assert_array_equal(structural_features("", 0, 0), np.zeros(6))


class TestExtractAll:
    def _doc(self, paras):
        return tokenize(RawDocument("d", "s", Label.SATIRE, tuple(paras)))

    def _tags(self, doc):
        return [["NN"] * len(p.tokens) for p in doc.paragraphs]

    def test_single_paragraph_identity(self, lexicon):
        d = self._doc(["Hello there, friend. We talked about 3 things!"])
        paras, whole = extract_all(d, self._tags(d), lexicon)
        np.testing.assert_array_equal(paras[0].values, whole.values)

    def test_counts_are_additive(self, lexicon, schema):
        d = self._doc([" ".join(["word"] * 10) + ".", " ".join(["More"] * 29) + ", 7!"])
        paras, whole = extract_all(d, self._tags(d), lexicon)
        assert paras[0]["WordCount"] == 10
        assert whole["WordCount"] == 40
        for name in ("WordCount", "Punc", "Digit", "Cap", "SentCount"):
            assert whole[name] == sum(p[name] for p in paras)

    def test_document_readability_is_joint(self, lexicon):
        d = self._doc(["The cat sat.", "Government officials denied everything yesterday!"])
        _, whole = extract_all(d, self._tags(d), lexicon)
        joint = readability_oracle(8, 2, 18, 53, 4)
        np.testing.assert_allclose(whole["FRE"], joint[0], atol=1e-9)

    def test_tag_count_mismatch(self, lexicon):
        d = self._doc(["A b."])
        with pytest.raises(FeatureError):
            extract_all(d, [["NN"]], lexicon)

    def test_schema_order(self, lexicon, schema):
        order = [FAMILIES.index(f) for f in schema.families]
        assert order == sorted(order)
        assert len(schema) == len(lexicon) + len(TAGSET) + 5 + 6


class TestScaler:
    def test_two_values(self):
        s = fit_scaler(np.array([[1.0], [3.0]]))
        np.testing.assert_array_equal(s.mean, [2.0])
        np.testing.assert_array_equal(s.std, [1.0])
        np.testing.assert_array_equal(apply_scaler(s, np.array([[1.0], [3.0]]))[:, 0], [-1, 1])

    def test_constant_feature(self):
        s = fit_scaler(np.array([[5.0, 1.0], [5.0, 2.0]]))
        assert apply_scaler(s, np.array([5.0, 9.0]))[0] == 0.0

    def test_mean_maps_to_zero(self):
        X = np.random.default_rng(0).normal(size=(20, 4))
        s = fit_scaler(X)
        np.testing.assert_array_equal(apply_scaler(s, s.mean), np.zeros(4))

    def test_dimension_mismatch(self):
        s = FeatureScaler(np.zeros(3), np.ones(3))
        with pytest.raises(FeatureError, match="dimension mismatch"):
            s.transform(np.zeros(2))


class TestCsv:
    def test_round_trip_with_provenance(self, tmp_path, lexicon, schema):
        d = tokenize(RawDocument("d1", "s", Label.TRUE_NEWS, ("One two.", "Three, four 5!")))
        tags = [["NN"] * len(p.tokens) for p in d.paragraphs]
        paras, whole = extract_all(d, tags, lexicon, schema)
        path = tmp_path / "f.csv"
        write_features_csv(path, schema, [("d1", paras, whole)])
        text = path.read_text()
        path.write_text("# seed=0\n" + text)
        got = read_features_csv(path, schema)
        P, D = got["d1"]
        np.testing.assert_array_equal(np.asarray(P), np.vstack([p.values for p in paras]))
        np.testing.assert_array_equal(D, whole.values)
        assert text.splitlines()[0].startswith("doc_id,paragraph_index,level,")
