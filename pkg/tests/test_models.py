import json
import warnings

import numpy as np
import pytest

from prodsearch.embeddings import SkipgramConfig
from prodsearch.evaluation import kfold_cv
from prodsearch.features import BOOLEAN_FEATURES
from prodsearch.models import (
    IR_FULL_FEATURES,
    MODEL_NAMES,
    FittedModel,
    ModelSettings,
    UnknownModel,
    evaluate_model,
    fit_model,
    make_trainer,
    train_stacked,
)
from prodsearch.svr import ZeroVarianceWarning

SETTINGS = ModelSettings(embedding=SkipgramConfig(dimension=16, min_count=2, epochs=5, seed=1), inner_k=3, seed=42)


def test_feature_layouts(prepared, loaded):
    instances = loaded[0][:10]
    m = FittedModel("boolean6", settings=SETTINGS)
    fm = m.features(prepared, instances)
    assert fm.names == list(BOOLEAN_FEATURES) and fm.values.shape == (10, 6)
    fm = FittedModel("ir_full", settings=SETTINGS).features(prepared, instances)
    assert fm.names == list(IR_FULL_FEATURES) and fm.values.shape == (10, 8)
    assert np.all(fm.values[:, :6] >= 0) and np.all(fm.values[:, 7] <= 0)


def test_unigram_vocabulary_comes_from_training_rows_only(prepared, loaded):
    instances = loaded[0]
    m = fit_model("unigram", prepared, instances[:20], ModelSettings(unigram_top_k=5))
    assert len(m.vocabulary) == 5
    train_terms = {t for d in prepared.unigram_documents(instances[:20]) for t in d}
    assert set(m.vocabulary) <= train_terms


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_every_model_cross_validates(prepared, loaded, name):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        rep = evaluate_model(name, prepared, loaded[0], 3, 42, SETTINGS)
    assert rep.n == len(loaded[0]) and len(rep.per_fold) == 3
    assert np.all((rep.predicted >= 1) & (rep.predicted <= 3))
    assert rep.rmse >= 0 and -1 <= rep.pearson <= 1


def test_boolean_model_learns_topic_signal(prepared, loaded):
    rep = evaluate_model("boolean6", prepared, loaded[0], 5, 42, SETTINGS)
    assert rep.pearson > 0.5


def test_logistic_decoder(prepared, loaded):
    s = ModelSettings(embedding=SETTINGS.embedding, decoder="logistic")
    rep = evaluate_model("word2vec", prepared, loaded[0], 3, 42, s)
    assert np.all((rep.predicted >= 1) & (rep.predicted <= 3))


def test_unknown_model(prepared, loaded):
    with pytest.raises(UnknownModel):
        fit_model("bm25_only", prepared, loaded[0])
    with pytest.raises(ValueError):
        ModelSettings(decoder="softmax")


def test_stacking_hygiene(prepared, loaded):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        model, rep = train_stacked(prepared, loaded[0], 3, 42, SETTINGS)
    assert rep.model_name == "stacked" and model.base is not None
    audit = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        fit_model("stacked", prepared, loaded[0], SETTINGS, audit=audit)
    assert len(audit) == SETTINGS.inner_k
    predicted = set()
    for pred_ids, train_ids in audit:
        assert not pred_ids & train_ids
        predicted |= pred_ids
    assert predicted == {i.id for i in loaded[0]}


def test_constant_base_reduces_to_boolean_model(prepared, loaded):
    constant = lambda rows: (lambda test: np.full(len(test), 2.0))  # noqa: E731
    with pytest.warns(ZeroVarianceWarning):
        _, stacked = train_stacked(prepared, loaded[0], 5, 42, SETTINGS, base_trainer=constant)
    plain = evaluate_model("boolean6", prepared, loaded[0], 5, 42, SETTINGS)
    assert abs(stacked.rmse - plain.rmse) < 1e-9 and abs(stacked.pearson - plain.pearson) < 1e-9


def test_oracle_base_does_not_hurt(prepared, loaded):
    gold = {i.id: i.relevance for i in loaded[0]}
    oracle = lambda rows: (lambda test: np.array([gold[r.id] for r in test]))  # noqa: E731
    _, stacked = train_stacked(prepared, loaded[0], 5, 42, SETTINGS, base_trainer=oracle)
    plain = evaluate_model("boolean6", prepared, loaded[0], 5, 42, SETTINGS)
    assert stacked.rmse <= plain.rmse


@pytest.mark.parametrize("name", ["boolean6", "ir_full", "unigram", "stacked", "doc2vec"])
def test_model_round_trip(prepared, loaded, name):
    s = ModelSettings(embedding=SETTINGS.embedding, inner_k=3, decoder="logistic")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        if name == "doc2vec" and prepared.paragraphs is None:
            prepared.train_paragraph_vectors(s.embedding)
        m = fit_model(name, prepared, loaded[0], s)
    back = FittedModel.from_dict(json.loads(json.dumps(m.to_dict())))
    assert np.array_equal(back.predict(prepared, loaded[0]), m.predict(prepared, loaded[0]))


def test_custom_base_is_not_serialisable(prepared, loaded):
    constant = lambda rows: (lambda test: np.full(len(test), 2.0))  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        m = fit_model("stacked", prepared, loaded[0], SETTINGS, base_trainer=constant)
    with pytest.raises(ValueError):
        m.to_dict()


def test_cv_is_reproducible(prepared, loaded):
    a = kfold_cv(loaded[0], 4, make_trainer("ir_full", prepared, SETTINGS), 9)
    b = kfold_cv(loaded[0], 4, make_trainer("ir_full", prepared, SETTINGS), 9)
    assert a.to_json() == b.to_json() and np.array_equal(a.predicted, b.predicted)
