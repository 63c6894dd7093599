"""Retrieval features for a (query, product) pair: Boolean OR/AND counts, BM25, Indri, unigrams."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import FIELDS
from .errors import ZeroProbabilityTerm
from .index import CollectionStats, FieldIndex

BOOLEAN_FEATURES = tuple(f"{op}_{fld}" for fld in FIELDS for op in ("or", "and"))


@dataclass(frozen=True)
class IndriParams:
    lam: float = 0.4
    mu: float = 2500.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must lie in [0, 1], got {self.b}")


# ---------------------------------------------------------------------------
# Boolean operators


def or_score(query_tokens: Sequence[str], index: FieldIndex, product_uid: int) -> int:
    """Largest per-term count of any query term in the document."""
    return max((index.tf(t, product_uid) for t in query_tokens), default=0)


def and_score(query_tokens: Sequence[str], index: FieldIndex, product_uid: int) -> int:
    """Smallest per-term count; zero as soon as one query term is missing."""
    return min((index.tf(t, product_uid) for t in query_tokens), default=0)


def boolean_features(
    query_tokens: Sequence[str], product_uid: int, indexes: Mapping[str, FieldIndex]
) -> dict[str, float]:
    """OR and AND counts for each field, keyed as in ``BOOLEAN_FEATURES``."""
    out: dict[str, float] = {}
    for fld in FIELDS:
        idx = indexes[fld]
        out[f"or_{fld}"] = float(or_score(query_tokens, idx, product_uid))
        out[f"and_{fld}"] = float(and_score(query_tokens, idx, product_uid))
    return out


# ---------------------------------------------------------------------------
# Indri query likelihood


def indri_term_factor(tf: float, doc_length: float, ctf: float, collection_length: float, params: IndriParams) -> float:
    """Jelinek-Mercer mix of a Dirichlet-smoothed document model and the collection model."""
    p_coll = ctf / collection_length if collection_length > 0 else 0.0
    lam, mu = params.lam, params.mu
    if doc_length + mu == 0:
        if lam < 1.0:
            raise ValueError("Dirichlet estimate undefined: empty document with mu = 0")
        dirichlet = 0.0
    else:
        dirichlet = (tf + mu * p_coll) / (doc_length + mu)
    return (1.0 - lam) * dirichlet + lam * p_coll


def indri_score(
    query_tokens: Sequence[str],
    index: FieldIndex,
    stats: CollectionStats,
    product_uid: int,
    params: IndriParams = IndriParams(),
) -> float:
    """Log query likelihood (a sum of log factors, so long queries do not underflow)."""
    ld = index.doc_length.get(product_uid, 0)
    total = 0.0
    for t in query_tokens:
        f = indri_term_factor(index.tf(t, product_uid), ld, index.ctf.get(t, 0), stats.collection_length, params)
        if f <= 0.0:
            raise ZeroProbabilityTerm(t)
        total += math.log(f)
    return total


def indri_feature(
    query_tokens: Sequence[str],
    index: FieldIndex,
    stats: CollectionStats,
    product_uid: int,
    params: IndriParams = IndriParams(),
) -> float:
    """Indri score over the query terms the field has seen at all; 0.0 if none."""
    known = [t for t in query_tokens if index.ctf.get(t, 0) > 0]
    if not known:
        return 0.0
    return indri_score(known, index, stats, product_uid, params)


# ---------------------------------------------------------------------------
# BM25


def bm25_idf(df: int, num_documents: int) -> float:
    return math.log((num_documents - df + 0.5) / (df + 0.5) + 1.0)


def bm25_score(
    query_tokens: Sequence[str],
    index: FieldIndex,
    stats: CollectionStats,
    product_uid: int,
    params: Bm25Params = Bm25Params(),
) -> float:
    ld = index.doc_length.get(product_uid, 0)
    norm = ld / stats.avg_doc_length if stats.avg_doc_length > 0 else 0.0
    k1, b = params.k1, params.b
    score = 0.0
    for t in query_tokens:
        f = index.tf(t, product_uid)
        if f == 0:
            continue
        idf = bm25_idf(index.df[t], stats.num_documents)
        score += idf * f * (k1 + 1.0) / (f + k1 * (1.0 - b + b * norm))
    return score


# ---------------------------------------------------------------------------
# unigram counts


class UnigramVocabulary:
    """The ``top_k`` terms by document frequency over a training split."""

    def __init__(self, top_k: int = 200):
        self.top_k = top_k
        self.terms: list[str] = []
        self.num_extracted = 0

    def fit(self, documents: Sequence[Sequence[str]]) -> "UnigramVocabulary":
        df: Counter = Counter()
        for toks in documents:
            df.update(set(toks))
        self.num_extracted = len(df)
        ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
        self.terms = [t for t, _ in ranked[: self.top_k]]
        return self

    @property
    def feature_names(self) -> list[str]:
        return [f"uni_{t}" for t in self.terms]

    def transform(self, documents: Sequence[Sequence[str]]) -> np.ndarray:
        col = {t: j for j, t in enumerate(self.terms)}
        out = np.zeros((len(documents), len(self.terms)))
        for i, toks in enumerate(documents):
            for t in toks:
                j = col.get(t)
                if j is not None:
                    out[i, j] += 1.0
        return out


def unigram_features(document: Sequence[str], vocabulary: UnigramVocabulary) -> dict[str, float]:
    """Sparse counts (only non-zero entries) of the vocabulary terms in one document."""
    counts = Counter(t for t in document if t in set(vocabulary.terms))
    return {f"uni_{t}": float(c) for t, c in sorted(counts.items())}


# ---------------------------------------------------------------------------
# matrices


@dataclass
class FeatureMatrix:
    ids: np.ndarray
    names: list[str]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.ids), len(self.names)):
            raise ValueError(f"values shape {self.values.shape} does not match {len(self.ids)} x {len(self.names)}")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    def columns(self, names: Sequence[str]) -> np.ndarray:
        pos = [self.names.index(n) for n in names]
        return self.values[:, pos]

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["id", *self.names])
            for i, row in zip(self.ids, self.values):
                w.writerow([int(i), *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "FeatureMatrix":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        names = rows[0][1:]
        ids = np.array([int(r[0]) for r in rows[1:]], dtype=np.int64)
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(len(ids), len(names))
        return cls(ids, names, values)
