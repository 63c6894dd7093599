"""Feature assembly and the named relevance models built on top of the SVR.

A :class:`PreparedCorpus` tokenises every product field and query once and
holds the three field indexes.  Each model name maps to a trainer usable by
:func:`prodsearch.evaluation.kfold_cv`: it takes training instances and
returns a predictor over arbitrary instances.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .corpus import FIELDS, LabeledInstance, ProductRecord
from .embeddings import (
    EmbeddingTable,
    ParagraphVectors,
    SkipgramConfig,
    score_word2vec,
    train_paragraph_vectors,
    train_skipgram,
)
from .errors import DataError, ProdsearchError
from .evaluation import EvalReport, SimilarityClassifier, kfold_cv, kfold_indices, train_similarity_classifier
from .features import (
    BOOLEAN_FEATURES,
    Bm25Params,
    FeatureMatrix,
    IndriParams,
    UnigramVocabulary,
    bm25_score,
    boolean_features,
    indri_feature,
)
from .index import CollectionStats, FieldIndex, index_from_tokens
from .svr import SvrConfig, SvrModel, smo_train
from .text import PipelineConfig, TextPipeline

log = logging.getLogger(__name__)

MODEL_NAMES = ("unigram", "boolean6", "ir_full", "word2vec", "doc2vec", "stacked", "combined")
SVR_MODELS = ("unigram", "boolean6", "ir_full", "stacked", "combined")
IR_FULL_FEATURES = BOOLEAN_FEATURES + ("bm25_description", "indri_description")
COMBINED_FEATURES = BOOLEAN_FEATURES + ("word2vec",)
STACKED_FEATURES = BOOLEAN_FEATURES + ("model1",)


class UnknownModel(ProdsearchError):
    pass


@dataclass
class ModelSettings:
    svr: SvrConfig = field(default_factory=SvrConfig)
    indri: IndriParams = field(default_factory=IndriParams)
    bm25: Bm25Params = field(default_factory=Bm25Params)
    embedding: SkipgramConfig = field(default_factory=SkipgramConfig)
    unigram_top_k: int = 200
    decoder: str = "direct"  # or "logistic" for the embedding models
    inner_k: int = 10  # folds used to produce out-of-fold base predictions when stacking
    seed: int = 42

    def __post_init__(self):
        if self.decoder not in ("direct", "logistic"):
            raise ValueError(f"decoder must be 'direct' or 'logistic', got {self.decoder!r}")


class PreparedCorpus:
    """Tokenised fields, queries and indexes for one set of products."""

    def __init__(self, products: Mapping[int, ProductRecord], pipeline: TextPipeline):
        self.products = products
        self.pipeline = pipeline
        self.field_tokens: dict[str, dict[int, list[str]]] = {
            fld: {uid: pipeline.document(p.field_text(fld)) for uid, p in products.items()} for fld in FIELDS
        }
        self.indexes: dict[str, FieldIndex] = {}
        self.stats: dict[str, CollectionStats] = {}
        for fld in FIELDS:
            self.indexes[fld], self.stats[fld] = index_from_tokens(fld, self.field_tokens[fld])
        self._queries: dict[str, list[str]] = {}
        self._cache: dict[tuple, np.ndarray] = {}
        self.word_table: EmbeddingTable | None = None
        self.paragraphs: ParagraphVectors | None = None

    @classmethod
    def build(cls, products: Mapping[int, ProductRecord], config: PipelineConfig | None = None) -> "PreparedCorpus":
        texts = [p.field_text(fld) for p in products.values() for fld in FIELDS]
        return cls(products, TextPipeline.fit(texts, config))

    def query(self, text: str) -> list[str]:
        toks = self._queries.get(text)
        if toks is None:
            toks = self._queries[text] = self.pipeline.query(text)
        return toks

    # feature blocks ------------------------------------------------------
    def _rows(self, key: str, instances: Sequence[LabeledInstance], fn: Callable[[LabeledInstance], Sequence[float]]) -> np.ndarray:
        out = []
        for inst in instances:
            ck = (key, inst.id, inst.product_uid, inst.search_term)
            row = self._cache.get(ck)
            if row is None:
                row = self._cache[ck] = np.asarray(fn(inst), dtype=np.float64)
            out.append(row)
        width = out[0].shape[0] if out else 0
        return np.vstack(out) if out else np.empty((0, width))

    def boolean_matrix(self, instances: Sequence[LabeledInstance]) -> np.ndarray:
        def fn(inst):
            f = boolean_features(self.query(inst.search_term), inst.product_uid, self.indexes)
            return [f[n] for n in BOOLEAN_FEATURES]

        return self._rows("boolean6", instances, fn)

    def ir_matrix(self, instances: Sequence[LabeledInstance], indri: IndriParams, bm25: Bm25Params) -> np.ndarray:
        idx, st = self.indexes["description"], self.stats["description"]

        def fn(inst):
            q = self.query(inst.search_term)
            return [bm25_score(q, idx, st, inst.product_uid, bm25), indri_feature(q, idx, st, inst.product_uid, indri)]

        key = f"ir:{indri.lam}:{indri.mu}:{bm25.k1}:{bm25.b}"
        return np.hstack([self.boolean_matrix(instances), self._rows(key, instances, fn)])

    def unigram_documents(self, instances: Sequence[LabeledInstance]) -> list[list[str]]:
        """search term + title + description tokens of each instance."""
        return [
            self.query(i.search_term)
            + self.field_tokens["title"][i.product_uid]
            + self.field_tokens["description"][i.product_uid]
            for i in instances
        ]

    # embeddings ----------------------------------------------------------
    def embedding_streams(self, instances: Sequence[LabeledInstance] = ()) -> list[list[str]]:
        """Titles and descriptions of every product, then each distinct search term of ``instances``."""
        streams = [self.field_tokens[f][uid] for uid in sorted(self.products) for f in ("title", "description")]
        streams.extend(self.query(q) for q in sorted({i.search_term for i in instances}))
        return [s for s in streams if s]

    def train_word_vectors(self, config: SkipgramConfig, instances: Sequence[LabeledInstance] = ()) -> EmbeddingTable:
        self.word_table = train_skipgram(self.embedding_streams(instances), config)
        return self.word_table

    def train_paragraph_vectors(self, config: SkipgramConfig) -> ParagraphVectors:
        docs = {uid: toks for uid, toks in sorted(self.field_tokens["description"].items()) if toks}
        self.paragraphs = train_paragraph_vectors(docs, config)
        return self.paragraphs

    def word2vec_scores(self, instances: Sequence[LabeledInstance]) -> np.ndarray:
        if self.word_table is None:
            raise RuntimeError("word vectors not trained")
        table = self.word_table
        return self._rows(
            "word2vec",
            instances,
            lambda i: [score_word2vec(self.query(i.search_term), self.field_tokens["description"][i.product_uid], table)],
        )[:, 0] if instances else np.empty(0)

    def doc2vec_scores(self, instances: Sequence[LabeledInstance]) -> np.ndarray:
        if self.paragraphs is None:
            raise RuntimeError("paragraph vectors not trained")
        pv = self.paragraphs

        def fn(i):
            if i.product_uid not in pv.row:
                return [2.0]
            return [pv.score(self.query(i.search_term), i.product_uid)]

        return self._rows("doc2vec", instances, fn)[:, 0] if instances else np.empty(0)


# ---------------------------------------------------------------------------
# fitted models


def _labels(instances: Sequence[LabeledInstance]) -> np.ndarray:
    y = np.array([i.relevance for i in instances], dtype=np.float64)
    if np.isnan(y).any():
        raise ValueError("training instances must carry relevance labels")
    return y


@dataclass
class FittedModel:
    """A trained model of one of the named kinds."""

    name: str
    svr: SvrModel | None = None
    base: "FittedModel | None" = None
    vocabulary: list[str] | None = None
    decoder: object | None = None
    settings: ModelSettings = field(default_factory=ModelSettings)
    base_predict: Callable | None = None  # stands in for ``base`` when a custom base trainer was used

    def features(self, corpus: PreparedCorpus, instances: Sequence[LabeledInstance]) -> FeatureMatrix:
        ids = np.array([i.id for i in instances], dtype=np.int64)
        s = self.settings
        if self.name == "boolean6":
            return FeatureMatrix(ids, list(BOOLEAN_FEATURES), corpus.boolean_matrix(instances))
        if self.name == "ir_full":
            return FeatureMatrix(ids, list(IR_FULL_FEATURES), corpus.ir_matrix(instances, s.indri, s.bm25))
        if self.name == "unigram":
            vocab = UnigramVocabulary(len(self.vocabulary))
            vocab.terms = list(self.vocabulary)
            return FeatureMatrix(ids, vocab.feature_names, vocab.transform(corpus.unigram_documents(instances)))
        if self.name == "combined":
            w = corpus.word2vec_scores(instances)
            return FeatureMatrix(ids, list(COMBINED_FEATURES), np.column_stack([corpus.boolean_matrix(instances), w]))
        if self.name == "stacked":
            base = self.base.predict(corpus, instances) if self.base is not None else self.base_predict(instances)
            return FeatureMatrix(ids, list(STACKED_FEATURES), np.column_stack([corpus.boolean_matrix(instances), base]))
        raise UnknownModel(f"model {self.name!r} has no feature matrix")

    def predict(self, corpus: PreparedCorpus, instances: Sequence[LabeledInstance]) -> np.ndarray:
        if not instances:
            return np.empty(0)
        if self.name in ("word2vec", "doc2vec"):
            sims = corpus.word2vec_scores(instances) if self.name == "word2vec" else corpus.doc2vec_scores(instances)
            if self.decoder is not None:
                return self.decoder.decode(sims - 2.0)
            return sims
        return self.svr.predict(self.features(corpus, instances).values)

    # serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        if self.base_predict is not None:
            raise ValueError("a stacked model with a custom base trainer cannot be serialised")
        s = self.settings
        d = {
            "format": "prodsearch-model",
            "version": 1,
            "name": self.name,
            "settings": {
                "svr": asdict(s.svr),
                "indri": asdict(s.indri),
                "bm25": asdict(s.bm25),
                "embedding": asdict(s.embedding),
                "unigram_top_k": s.unigram_top_k,
                "decoder": s.decoder,
                "inner_k": s.inner_k,
                "seed": s.seed,
            },
            "svr": self.svr.to_dict() if self.svr is not None else None,
            "base": self.base.to_dict() if self.base is not None else None,
            "vocabulary": self.vocabulary,
            "decoder": None,
        }
        if isinstance(self.decoder, SimilarityClassifier):
            c = self.decoder
            d["decoder"] = {
                "weights": c.weights.tolist(),
                "mean": c.mean,
                "scale": c.scale,
                "constant_class": c.constant_class,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        if d.get("format") != "prodsearch-model" or d.get("version") != 1:
            raise DataError("not a prodsearch model file (or unsupported version)")
        st = d["settings"]
        settings = ModelSettings(
            svr=SvrConfig(**st["svr"]),
            indri=IndriParams(**st["indri"]),
            bm25=Bm25Params(**st["bm25"]),
            embedding=SkipgramConfig(**st["embedding"]),
            unigram_top_k=st["unigram_top_k"],
            decoder=st["decoder"],
            inner_k=st["inner_k"],
            seed=st["seed"],
        )
        dec = d.get("decoder")
        decoder = None
        if dec is not None:
            decoder = SimilarityClassifier(np.asarray(dec["weights"]), dec["mean"], dec["scale"], dec["constant_class"])
        return cls(
            name=d["name"],
            svr=SvrModel.from_dict(d["svr"]) if d.get("svr") else None,
            base=cls.from_dict(d["base"]) if d.get("base") else None,
            vocabulary=d.get("vocabulary"),
            decoder=decoder,
            settings=settings,
        )


def fit_model(
    name: str,
    corpus: PreparedCorpus,
    instances: Sequence[LabeledInstance],
    settings: ModelSettings | None = None,
    *,
    audit: list | None = None,
    base_trainer: Callable | None = None,
) -> FittedModel:
    """Train model ``name`` on ``instances``.

    For ``stacked`` the base model's predictions on the training rows are
    produced out-of-fold; ``audit`` (if given) receives one
    ``(row ids predicted, row ids trained on)`` pair per inner fold.  The base
    is the unigram model unless ``base_trainer`` (rows -> predictor) is given.
    """
    settings = settings or ModelSettings()
    if name not in MODEL_NAMES:
        raise UnknownModel(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    y = _labels(instances)
    model = FittedModel(name, settings=settings)

    if name in ("word2vec", "doc2vec"):
        if settings.decoder == "logistic":
            sims = corpus.word2vec_scores(instances) if name == "word2vec" else corpus.doc2vec_scores(instances)
            model.decoder = train_similarity_classifier(sims - 2.0, y)
        return model

    if name == "unigram":
        vocab = UnigramVocabulary(settings.unigram_top_k).fit(corpus.unigram_documents(instances))
        model.vocabulary = list(vocab.terms)
    elif name == "stacked":
        base_oof = np.empty(len(instances))
        inner_k = min(settings.inner_k, len(instances))
        for test in kfold_indices(len(instances), inner_k, settings.seed + 1):
            mask = np.ones(len(instances), dtype=bool)
            mask[test] = False
            train_rows = [instances[i] for i in np.flatnonzero(mask)]
            test_rows = [instances[i] for i in test]
            if base_trainer is None:
                inner = fit_model("unigram", corpus, train_rows, settings)
                base_oof[test] = inner.predict(corpus, test_rows)
            else:
                base_oof[test] = base_trainer(train_rows)(test_rows)
            if audit is not None:
                audit.append(({r.id for r in test_rows}, {r.id for r in train_rows}))
        if base_trainer is None:
            model.base = fit_model("unigram", corpus, instances, settings)
        else:
            model.base_predict = base_trainer(instances)
        X = np.column_stack([corpus.boolean_matrix(instances), base_oof])
        model.svr = smo_train(X, y, settings.svr, list(STACKED_FEATURES))
        return model

    fm = model.features(corpus, instances)
    model.svr = smo_train(fm.values, y, settings.svr, fm.names)
    return model


def make_trainer(
    name: str,
    corpus: PreparedCorpus,
    settings: ModelSettings | None = None,
    *,
    audit: list | None = None,
    base_trainer: Callable | None = None,
):
    settings = settings or ModelSettings()
    if name not in MODEL_NAMES:
        raise UnknownModel(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")

    def trainer(train_rows):
        fitted = fit_model(name, corpus, train_rows, settings, audit=audit, base_trainer=base_trainer)
        return lambda rows: fitted.predict(corpus, rows)

    return trainer


def prepare_embeddings(name: str, corpus: PreparedCorpus, instances: Sequence[LabeledInstance], settings: ModelSettings) -> None:
    """Unsupervised embedding training needed by ``name`` (labels are never seen)."""
    if name in ("word2vec", "combined") and corpus.word_table is None:
        corpus.train_word_vectors(settings.embedding, instances)
    if name == "doc2vec" and corpus.paragraphs is None:
        corpus.train_paragraph_vectors(settings.embedding)


def evaluate_model(
    name: str,
    corpus: PreparedCorpus,
    instances: Sequence[LabeledInstance],
    k: int,
    seed: int,
    settings: ModelSettings | None = None,
    header: dict | None = None,
) -> EvalReport:
    settings = settings or ModelSettings(seed=seed)
    prepare_embeddings(name, corpus, instances, settings)
    return kfold_cv(instances, k, make_trainer(name, corpus, settings), seed, model_name=name, header=header)


def train_stacked(
    corpus: PreparedCorpus,
    instances: Sequence[LabeledInstance],
    k: int,
    seed: int,
    settings: ModelSettings | None = None,
    *,
    base_trainer: Callable | None = None,
) -> tuple[FittedModel, EvalReport]:
    """Model III on all rows plus its nested out-of-fold evaluation.

    Stacking hygiene is checked as the folds run: no base prediction used as a
    meta-feature comes from a base model that trained on that row.
    """
    settings = settings or ModelSettings(seed=seed)
    audit: list = []
    report = kfold_cv(instances, k, make_trainer("stacked", corpus, settings, audit=audit, base_trainer=base_trainer), seed, model_name="stacked")
    for predicted, trained in audit:
        if predicted & trained:
            raise AssertionError("base-model prediction leaked from its own training rows")
    audit.clear()
    model = fit_model("stacked", corpus, instances, settings, audit=audit, base_trainer=base_trainer)
    for predicted, trained in audit:
        if predicted & trained:
            raise AssertionError("base-model prediction leaked from its own training rows")
    return model, report
