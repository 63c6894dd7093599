import string

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodsearch import _accel
from prodsearch.porter import porter_stem
from prodsearch.text import (
    PipelineConfig,
    SpellDictionary,
    TextPipeline,
    _encode,
    _encode_matrix,
    _levenshtein_rows_loop,
    _levenshtein_rows_numpy,
    canonicalize_numbers,
    correct_token,
    default_stopwords,
    default_unit_synonyms,
    levenshtein,
    preprocess,
    remove_stopwords,
    tokenize,
)
from oracles import levenshtein_recursive

short_words = st.text(alphabet="abcde", max_size=7)


class TestTokenize:
    def test_hyphenated_title(self):
        assert tokenize("Simpson Strong-Tie 12-Gauge Angle") == ["simpson", "strong", "tie", "12", "gauge", "angle"]

    def test_empty(self):
        assert tokenize("") == []

    def test_fractions_and_decimals_survive(self):
        assert tokenize("1/2 in. x 260 in.") == ["1/2", "in", "x", "260", "in"]
        assert tokenize("3.5 gal") == ["3.5", "gal"]

    def test_trailing_punctuation_after_digits_is_split(self):
        assert tokenize("size 4. done") == ["size", "4", "done"]

    @given(st.text(max_size=40))
    def test_tokens_are_lowercase_and_nonempty(self, s):
        for t in tokenize(s):
            assert t and t == t.lower()


class TestStopwords:
    def test_bundled_list(self):
        sw = default_stopwords()
        assert len(sw) == 127
        assert "the" in sw and "bracket" not in sw

    def test_examples(self):
        sw = default_stopwords()
        assert remove_stopwords(["the", "angle", "bracket"], sw) == ["angle", "bracket"]
        assert remove_stopwords([], sw) == []
        assert remove_stopwords(["the", "and", "of"], sw) == []


class TestCanonicalize:
    def test_examples(self):
        assert canonicalize_numbers("4ft") == "4 ft"
        assert canonicalize_numbers("no digits here") == "no digits here"
        assert canonicalize_numbers("260 inches") == "260 in"

    def test_thousands_and_units(self):
        assert canonicalize_numbers("1,000 lbs") == "1000 lb"
        assert canonicalize_numbers("2-gallon") == "2 gal"

    def test_unit_words_without_a_number_are_kept(self):
        assert canonicalize_numbers("feet 3 pounds") == "feet 3 lb"

    def test_synonym_table(self):
        table = dict(default_unit_synonyms())
        assert table["inches"] == "in" and table["feet"] == "ft"

    @given(st.text(alphabet=string.ascii_letters + " .,-/", max_size=40))
    def test_digit_free_text_is_a_fixpoint(self, s):
        assert canonicalize_numbers(s) == s


class TestLevenshtein:
    def test_examples(self):
        assert levenshtein("abc", "abc") == 0
        assert levenshtein("", "abc") == 3
        assert levenshtein("kitten", "sitting") == 3

    @given(short_words, short_words)
    def test_matches_recursive_definition(self, a, b):
        assert levenshtein(a, b) == levenshtein_recursive(a, b)

    @given(short_words, short_words, short_words)
    def test_metric_axioms(self, a, b, c):
        assert levenshtein(a, b) == levenshtein(b, a)
        assert (levenshtein(a, b) == 0) == (a == b)
        assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)

    @given(st.lists(short_words, min_size=1, max_size=20), short_words, st.integers(0, 4))
    def test_kernels_agree(self, words, query, bound):
        mat, lengths = _encode_matrix(words)
        q = _encode(query)
        expect = np.minimum([levenshtein_recursive(query, w) for w in words], bound + 1)
        assert np.array_equal(_levenshtein_rows_numpy(q, mat, lengths, bound), expect)
        assert np.array_equal(_levenshtein_rows_loop(q, mat, lengths, bound), expect)


class TestSpelling:
    def test_examples(self):
        d = {"bracket": 100, "brick": 50}
        assert correct_token("bracket", d) == "bracket"
        assert correct_token("brackt", d) == "bracket"
        assert correct_token("zzzzzz", d, 2) == "zzzzzz"

    def test_ties_prefer_frequent_then_lexicographic(self):
        assert correct_token("cat", {"bat": 5, "hat": 9}) == "hat"
        assert correct_token("cat", {"bat": 5, "hat": 5}) == "bat"

    @given(st.dictionaries(short_words.filter(bool), st.integers(1, 50), min_size=1, max_size=15), short_words)
    def test_never_moves_away_from_dictionary(self, freqs, token):
        d = SpellDictionary(freqs)
        out = d.correct(token, 2)
        nearest = min(levenshtein_recursive(token, w) for w in freqs)
        out_nearest = min(levenshtein_recursive(out, w) for w in freqs)
        assert out_nearest <= nearest


class TestPreprocess:
    def test_stopword_only(self):
        assert preprocess("the and of") == []

    def test_hand_traced_sentence(self):
        # "8ft" splits, "feet"-style synonyms map, stopwords drop, words stem
        assert preprocess("The 8ft Ladders are Folding") == ["8", "ft", "ladder", "fold"]

    def test_query_spelling_is_corrected_before_stemming(self):
        pipe = TextPipeline.fit(["angle bracket", "steel bracket"])
        assert pipe.query("angle brackt") == ["angl", "bracket"]
        assert pipe.document("angle brackt") == ["angl", "brackt"]

    def test_idempotent_on_stem_stable_tokens(self):
        cfg = PipelineConfig(spell_correct=False)
        for text in ["copper pipe fitting", "cordless drill battery 18 volt", "led bulb 60 watt"]:
            stable = [t for t in preprocess(text, cfg) if porter_stem(t) == t]
            assert stable
            assert preprocess(" ".join(stable), cfg) == stable

    def test_deterministic(self):
        text = "Simpson Strong-Tie 12-Gauge Angle, 1/2 in. x 260 in."
        assert preprocess(text) == preprocess(text)

    def test_fingerprint_tracks_config(self):
        assert PipelineConfig().fingerprint() == PipelineConfig().fingerprint()
        assert PipelineConfig().fingerprint() != PipelineConfig(stem=False).fingerprint()

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            PipelineConfig(max_edit_distance=-1)


def test_backend_reports_flag():
    assert _accel.backend() in ("numba", "numpy")
