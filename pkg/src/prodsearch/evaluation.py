"""Metrics, k-fold cross-validation and the 3-class expected-score decoder."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import RELEVANCE_MAX, RELEVANCE_MIN
from .errors import (
    ConstantSequence,
    EmptyInput,
    LengthMismatch,
    NotADistribution,
    SingleClassData,
    TooFewInstances,
)

CLASS_SCORES = np.array([1.0, 2.0, 3.0])


# ---------------------------------------------------------------------------
# metrics


def _pair(predictions, gold) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(predictions, dtype=np.float64).ravel()
    g = np.asarray(gold, dtype=np.float64).ravel()
    if p.shape != g.shape:
        raise LengthMismatch(f"{p.size} predictions for {g.size} gold values")
    if p.size == 0:
        raise EmptyInput("no values to score")
    return p, g


def rmse(predictions, gold) -> float:
    p, g = _pair(predictions, gold)
    return math.sqrt(float(np.mean((p - g) ** 2)))


def pearson(predictions, gold) -> float:
    """Sample correlation coefficient."""
    p, g = _pair(predictions, gold)
    if p.size < 2:
        raise EmptyInput("pearson needs at least two pairs")
    dp = p - p.mean()
    dg = g - g.mean()
    sp = math.sqrt(float(dp @ dp))
    sg = math.sqrt(float(dg @ dg))
    if sp == 0.0 or sg == 0.0:
        raise ConstantSequence("correlation undefined for a constant sequence")
    return float(np.clip((dp @ dg) / (sp * sg), -1.0, 1.0))


def pearson_or_flag(predictions, gold) -> tuple[float, bool]:
    """``(r, False)``, or ``(0.0, True)`` when either side is constant."""
    try:
        return pearson(predictions, gold), False
    except ConstantSequence:
        return 0.0, True


# ---------------------------------------------------------------------------
# cross-validation


def kfold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``range(n)`` with ``seed`` and cut it into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise TooFewInstances(f"k must be >= 2, got {k}")
    if n < k:
        raise TooFewInstances(f"{n} instances cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(order, k)]


# A trainer receives the training rows and returns a function that predicts
# arbitrary rows.  Rows are whatever the caller's instance objects are.
Predictor = Callable[[Sequence], np.ndarray]
Trainer = Callable[[Sequence], Predictor]


@dataclass
class EvalReport:
    model_name: str
    rmse: float
    pearson: float
    n: int
    per_fold: list[tuple[float, float]]
    pearson_undefined: bool = False
    header: dict = field(default_factory=dict)
    ids: list = field(default_factory=list)
    gold: np.ndarray = field(default_factory=lambda: np.empty(0))
    predicted: np.ndarray = field(default_factory=lambda: np.empty(0))
    fold_of: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        if self.rmse < 0:
            raise ValueError("rmse must be non-negative")
        if not -1.0 <= self.pearson <= 1.0:
            raise ValueError("pearson must lie in [-1, 1]")

    def to_dict(self) -> dict:
        return {
            "model_name": self.model_name,
            "n": self.n,
            "rmse": self.rmse,
            "pearson": self.pearson,
            "pearson_undefined": self.pearson_undefined,
            "k": len(self.per_fold),
            "per_fold": [{"rmse": r, "pearson": p} for r, p in self.per_fold],
            "header": self.header,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def write_predictions(self, path: str | Path) -> None:
        """Per-instance out-of-fold predictions: ``id,gold,predicted,model_name``."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "gold", "predicted", "model_name"])
            for i, g, p in zip(self.ids, self.gold, self.predicted):
                w.writerow([i, repr(float(g)), repr(float(p)), self.model_name])


def kfold_cv(
    instances: Sequence,
    k: int,
    trainer: Trainer,
    seed: int,
    *,
    model_name: str = "model",
    gold: Sequence[float] | None = None,
    ids: Sequence | None = None,
    header: dict | None = None,
) -> EvalReport:
    """Pooled out-of-fold evaluation.

    ``gold`` and ``ids`` default to each instance's ``relevance`` and ``id``.
    Headline metrics are computed over the pooled predictions; per-fold values
    are reported alongside.
    """
    n = len(instances)
    folds = kfold_indices(n, k, seed)
    gold_arr = np.asarray([x.relevance for x in instances] if gold is None else gold, dtype=np.float64)
    if gold_arr.shape != (n,):
        raise LengthMismatch("gold must have one value per instance")
    id_list = [x.id for x in instances] if ids is None else list(ids)
    pred = np.full(n, np.nan)
    fold_of = np.full(n, -1, dtype=np.int64)
    per_fold: list[tuple[float, float]] = []
    for f, test in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[test] = False
        train_rows = [instances[i] for i in np.flatnonzero(mask)]
        predictor = trainer(train_rows)
        out = np.asarray(predictor([instances[i] for i in test]), dtype=np.float64)
        if out.shape != (len(test),):
            raise LengthMismatch(f"fold {f}: predictor returned {out.shape} for {len(test)} rows")
        pred[test] = out
        fold_of[test] = f
        r, _ = pearson_or_flag(out, gold_arr[test]) if len(test) >= 2 else (0.0, True)
        per_fold.append((rmse(out, gold_arr[test]), r))
    assert (fold_of >= 0).all(), "every instance is predicted exactly once"
    r, undefined = pearson_or_flag(pred, gold_arr)
    return EvalReport(
        model_name=model_name,
        rmse=rmse(pred, gold_arr),
        pearson=r,
        n=n,
        per_fold=per_fold,
        pearson_undefined=undefined,
        header=dict(header or {}, seed=seed, k=k),
        ids=id_list,
        gold=gold_arr,
        predicted=pred,
        fold_of=fold_of,
    )


# ---------------------------------------------------------------------------
# 3-class decoding


def expected_score_decode(class_probabilities, tol: float = 1e-9) -> float:
    """Sum of p_k * k over the classes scored 1, 2, 3."""
    p = np.asarray(class_probabilities, dtype=np.float64)
    if p.shape != (3,) or np.any(p < -tol) or abs(p.sum() - 1.0) > tol:
        raise NotADistribution(f"not a 3-class distribution: {p.tolist()}")
    return float(np.clip(p @ CLASS_SCORES, RELEVANCE_MIN, RELEVANCE_MAX))


def bucket_labels(relevance) -> np.ndarray:
    """Round half up to the nearest of 1, 2, 3; returns class indices 0..2."""
    r = np.asarray(relevance, dtype=np.float64)
    return (np.clip(np.floor(r + 0.5), 1, 3) - 1).astype(np.int64)


def _design(x: np.ndarray) -> np.ndarray:
    return np.column_stack([x, np.ones_like(x)])


def logistic_loss_and_grad(W: np.ndarray, X: np.ndarray, classes: np.ndarray, l2: float = 0.0):
    """Mean softmax cross-entropy of ``X @ W.T`` against ``classes`` and its gradient in ``W``.

    ``W`` has one row per class; ``X`` already includes any bias column.
    """
    Z = X @ W.T
    Z = Z - Z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(Z).sum(axis=1))
    n = X.shape[0]
    loss = float(np.mean(logsum - Z[np.arange(n), classes])) + 0.5 * l2 * float((W * W).sum())
    P = np.exp(Z - logsum[:, None])
    P[np.arange(n), classes] -= 1.0
    grad = P.T @ X / n + l2 * W
    return loss, grad


@dataclass
class SimilarityClassifier:
    """Multinomial logistic regression on one scalar similarity feature."""

    weights: np.ndarray  # (3, 2): slope and intercept per class, on the standardised feature
    mean: float
    scale: float
    constant_class: int | None = None
    iterations: int = 0

    def probabilities(self, similarity) -> np.ndarray:
        s = np.atleast_1d(np.asarray(similarity, dtype=np.float64))
        if self.constant_class is not None:
            P = np.zeros((s.size, 3))
            P[:, self.constant_class] = 1.0
            return P
        Z = _design((s - self.mean) / self.scale) @ self.weights.T
        Z -= Z.max(axis=1, keepdims=True)
        E = np.exp(Z)
        return E / E.sum(axis=1, keepdims=True)

    def predict_class(self, similarity) -> np.ndarray:
        return self.probabilities(similarity).argmax(axis=1)

    def decode(self, similarity) -> np.ndarray:
        return np.array([expected_score_decode(p) for p in self.probabilities(similarity)])


def train_similarity_classifier(
    similarity_features,
    labels,
    *,
    learning_rate: float = 1.0,
    tolerance: float = 1e-8,
    max_iter: int = 100_000,
    l2: float = 0.0,
    fallback: bool = True,
) -> SimilarityClassifier:
    """Gradient descent until the loss moves by less than ``tolerance``.

    ``labels`` are relevance scores and are bucketed with :func:`bucket_labels`.
    With a single observed class the model degenerates to a constant decoder
    (or raises :class:`SingleClassData` when ``fallback`` is off).
    """
    s = np.asarray(similarity_features, dtype=np.float64).ravel()
    classes = bucket_labels(labels).ravel()
    if s.shape != classes.shape:
        raise LengthMismatch("one label per similarity value is required")
    if s.size == 0:
        raise EmptyInput("no training data")
    observed = np.unique(classes)
    if observed.size == 1:
        if not fallback:
            raise SingleClassData(f"only class {int(observed[0]) + 1} present")
        warnings.warn("single-class training data; decoder is constant", RuntimeWarning, stacklevel=2)
        return SimilarityClassifier(np.zeros((3, 2)), 0.0, 1.0, constant_class=int(observed[0]))
    mean = float(s.mean())
    scale = float(s.std()) or 1.0
    X = _design((s - mean) / scale)
    W = np.zeros((3, 2))
    prev, _ = logistic_loss_and_grad(W, X, classes, l2)
    it = 0
    for it in range(1, max_iter + 1):
        _, g = logistic_loss_and_grad(W, X, classes, l2)
        W = W - learning_rate * g
        loss, _ = logistic_loss_and_grad(W, X, classes, l2)
        if abs(prev - loss) < tolerance:
            break
        prev = loss
    return SimilarityClassifier(W, mean, scale, iterations=it)
