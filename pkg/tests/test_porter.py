from pathlib import Path

import pytest

from prodsearch.porter import porter_stem

DATA = Path(__file__).parent / "data"


def _pairs():
    voc = (DATA / "porter_voc.txt").read_text().split("\n")
    out = (DATA / "porter_output.txt").read_text().split("\n")
    return [(a, b) for a, b in zip(voc, out) if a]


def test_vocabulary_size():
    assert len(_pairs()) == 23531


def test_official_vocabulary():
    wrong = [(w, e, porter_stem(w)) for w, e in _pairs() if porter_stem(w) != e]
    assert not wrong, wrong[:10]


@pytest.mark.parametrize(
    "word,stem",
    [("caresses", "caress"), ("sky", "sky"), ("a", "a"), ("ponies", "poni"), ("relational", "relat"), ("generalization", "gener")],
)
def test_examples(word, stem):
    assert porter_stem(word) == stem


def test_non_alphabetic_tokens_pass_through():
    assert porter_stem("1/2") == "1/2"
    assert porter_stem("12") == "12"
