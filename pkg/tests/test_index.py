from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from prodsearch.corpus import ProductRecord
from prodsearch.errors import EmptyCorpus
from prodsearch.index import build_index, index_from_tokens, load_index, save_index, tf
from prodsearch.text import PipelineConfig

TOY = {1: ["red", "red", "door"], 2: ["red", "paint"]}

corpora = st.dictionaries(
    st.integers(1, 1000),
    st.lists(st.sampled_from(["a", "b", "c", "d", "e", "f"]), max_size=12),
    min_size=1,
    max_size=10,
)


def test_toy_counts():
    idx, stats = index_from_tokens("description", TOY)
    assert idx.ctf["red"] == 3 and idx.df["red"] == 2
    assert tf(idx, "red", 1) == 2
    assert stats.collection_length == 5 and stats.num_documents == 2 and stats.avg_doc_length == 2.5


def test_unseen_term_and_sum_identity():
    idx, _ = index_from_tokens("description", TOY)
    assert tf(idx, "window", 1) == 0
    for term in idx.ctf:
        assert sum(tf(idx, term, d) for d in TOY) == idx.ctf[term]


def test_single_empty_document():
    idx, stats = index_from_tokens("attributes", {7: []})
    assert idx.doc_length == {7: 0} and idx.postings == {}
    assert stats.collection_length == 0


def test_empty_corpus():
    with pytest.raises(EmptyCorpus):
        index_from_tokens("title", {})


@given(corpora)
def test_matches_naive_rescan(docs):
    idx, stats = index_from_tokens("title", docs)
    for term in {t for toks in docs.values() for t in toks}:
        assert idx.ctf[term] == sum(toks.count(term) for toks in docs.values())
        assert idx.df[term] == sum(term in toks for toks in docs.values())
        assert 1 <= idx.df[term] <= len(docs)
    for uid, toks in docs.items():
        assert idx.doc_length[uid] == len(toks)
        for term, c in Counter(toks).items():
            assert idx.tf(term, uid) == c
    assert stats.collection_length == sum(map(len, docs.values()))


def test_build_from_products_uses_pipeline():
    products = {1: ProductRecord(1, "Red Doors", "x"), 2: ProductRecord(2, "red paint", "y")}
    idx, _ = build_index(products, "title", PipelineConfig(spell_correct=False))
    assert idx.ctf["red"] == 2 and idx.tf("door", 1) == 1
    a, _ = build_index(products, "title")
    b, _ = build_index(products, "title")
    assert a == b
    with pytest.raises(ValueError):
        build_index(products, "brand")


@given(corpora)
def test_cache_round_trip(tmp_path_factory, docs):
    path = tmp_path_factory.mktemp("idx") / "title.bin"
    idx, stats = index_from_tokens("title", docs)
    save_index(path, idx, "abc")
    got = load_index(path, "abc")
    assert got is not None
    assert got[0] == idx and got[1] == stats


def test_cache_rejects_other_config(tmp_path):
    idx, _ = index_from_tokens("title", TOY)
    save_index(tmp_path / "i.bin", idx, "abc")
    assert load_index(tmp_path / "i.bin", "xyz") is None
