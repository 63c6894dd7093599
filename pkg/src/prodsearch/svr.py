"""Epsilon-insensitive support vector regression trained by SMO, RBF kernel.

The dual is solved in the doubled form with 2n bounded variables ``a``::

    minimise   1/2 a'Qa + p'a
    subject to s'a = 0,  0 <= a <= C

where the first n variables carry sign s = +1 and ``p = eps - y``, the last n
carry s = -1 and ``p = eps + y``, and ``Q[t, u] = s_t s_u K(x_t, x_u)``.  The
regression coefficients are ``beta = a[:n] - a[n:]``.  Each step optimises the
maximally KKT-violating pair analytically; training stops once the violation
gap drops to ``tolerance``.
"""
from __future__ import annotations

import json
import logging
import warnings
from collections import OrderedDict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _accel
from .corpus import RELEVANCE_MAX, RELEVANCE_MIN
from .errors import DataError, DimensionMismatch

log = logging.getLogger(__name__)

_TAU = 1e-12
FORMAT_NAME = "prodsearch-svr"
FORMAT_VERSION = 1


class ConvergenceWarning(UserWarning):
    pass


class ZeroVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SvrConfig:
    c: float = 1.0
    gamma: float = 0.01
    epsilon: float = 0.001
    tolerance: float = 0.001
    max_passes: int = 1_000_000
    full_gram_limit: int = 8000
    cache_rows: int = 2000

    def __post_init__(self):
        for name in ("c", "gamma", "epsilon", "tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


def rbf_kernel(x, y, gamma: float) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"kernel arguments have shapes {x.shape} and {y.shape}")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


def rbf_gram(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


# ---------------------------------------------------------------------------
# solver kernels


@_accel.njit
def _smo_loop(X, y, c, eps, tol, gamma, max_iter, gram, use_gram, cache_rows, debug):
    n = y.shape[0]
    m = 2 * n
    a = np.zeros(m)
    G = np.empty(m)
    s = np.empty(m)
    for t in range(n):
        s[t] = 1.0
        s[t + n] = -1.0
        G[t] = eps - y[t]
        G[t + n] = eps + y[t]

    ncache = 0 if use_gram else min(cache_rows, n)
    cache = np.empty((max(ncache, 1), n))
    slot_of = np.full(n, -1, dtype=np.int64)
    owner = np.full(max(ncache, 1), -1, dtype=np.int64)
    stamp = np.zeros(max(ncache, 1), dtype=np.int64)
    ki = np.empty(n)
    kj = np.empty(n)
    trace = np.empty(max_iter + 1 if debug else 1)

    it = 0
    gap = np.inf
    while True:
        gmax = -np.inf
        gmin = np.inf
        i = -1
        j = -1
        for t in range(m):
            sg = -s[t] * G[t]
            if (s[t] > 0 and a[t] < c) or (s[t] < 0 and a[t] > 0):
                if sg > gmax:
                    gmax = sg
                    i = t
            if (s[t] > 0 and a[t] > 0) or (s[t] < 0 and a[t] < c):
                if sg < gmin:
                    gmin = sg
                    j = t
        gap = gmax - gmin
        if debug:
            obj = 0.0
            for t in range(m):
                p = eps - y[t] if t < n else eps + y[t - n]
                obj += 0.5 * a[t] * (G[t] + p)
            trace[it] = obj
        if i < 0 or j < 0 or gap <= tol or it >= max_iter:
            break
        it += 1

        # kernel rows of the two underlying samples
        for which in range(2):
            sample = (i if which == 0 else j) % n
            row = ki if which == 0 else kj
            if use_gram:
                for u in range(n):
                    row[u] = gram[sample, u]
            else:
                slot = slot_of[sample]
                if slot < 0:
                    slot = 0
                    for q in range(ncache):
                        if owner[q] < 0:
                            slot = q
                            break
                        if stamp[q] < stamp[slot]:
                            slot = q
                    if owner[slot] >= 0:
                        slot_of[owner[slot]] = -1
                    owner[slot] = sample
                    slot_of[sample] = slot
                    for u in range(n):
                        d2 = 0.0
                        for f in range(X.shape[1]):
                            diff = X[sample, f] - X[u, f]
                            d2 += diff * diff
                        cache[slot, u] = np.exp(-gamma * d2)
                stamp[slot] = it
                for u in range(n):
                    row[u] = cache[slot, u]

        si = s[i]
        sj = s[j]
        kij = ki[j % n]
        ai_old = a[i]
        aj_old = a[j]
        if si != sj:
            quad = 2.0 - 2.0 * kij
            if quad <= 0.0:
                quad = 1e-12
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0:
                if a[i] > c:
                    a[i] = c
                    a[j] = c - diff
            else:
                if a[j] > c:
                    a[j] = c
                    a[i] = c + diff
        else:
            quad = 2.0 - 2.0 * kij
            if quad <= 0.0:
                quad = 1e-12
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > c:
                if a[i] > c:
                    a[i] = c
                    a[j] = total - c
            else:
                if a[j] < 0:
                    a[j] = 0.0
                    a[i] = total
            if total > c:
                if a[j] > c:
                    a[j] = c
                    a[i] = total - c
            else:
                if a[i] < 0:
                    a[i] = 0.0
                    a[j] = total
        dai = (a[i] - ai_old) * si
        daj = (a[j] - aj_old) * sj
        for u in range(n):
            g = ki[u] * dai + kj[u] * daj
            G[u] += g
            G[u + n] -= g

    # offset from free variables, or the middle of the feasible interval
    ub = np.inf
    lb = -np.inf
    nfree = 0
    sfree = 0.0
    for t in range(m):
        yg = s[t] * G[t]
        if a[t] >= c:
            if s[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif a[t] <= 0:
            if s[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree > 0 else 0.5 * (ub + lb)
    beta = a[:n] - a[n:]
    return beta, rho, it, gap, trace[: it + 1 if debug else 0]


def _smo_numpy(X, y, c, eps, tol, gamma, max_iter, gram, use_gram, cache_rows, debug):
    n = y.shape[0]
    s = np.concatenate([np.ones(n), -np.ones(n)])
    p = np.concatenate([eps - y, eps + y])
    a = np.zeros(2 * n)
    G = p.copy()
    cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(sample: int) -> np.ndarray:
        if use_gram:
            return gram[sample]
        r = cache.get(sample)
        if r is None:
            d = X - X[sample]
            r = np.exp(-gamma * np.einsum("ij,ij->i", d, d))
            cache[sample] = r
            if len(cache) > cache_rows:
                cache.popitem(last=False)
        else:
            cache.move_to_end(sample)
        return r

    trace = []
    it = 0
    while True:
        sg = -s * G
        up = ((s > 0) & (a < c)) | ((s < 0) & (a > 0))
        low = ((s > 0) & (a > 0)) | ((s < 0) & (a < c))
        if not up.any() or not low.any():
            gap = np.inf
            break
        i = int(np.argmax(np.where(up, sg, -np.inf)))
        j = int(np.argmin(np.where(low, sg, np.inf)))
        gap = sg[i] - sg[j]
        if debug:
            trace.append(0.5 * float(a @ (G + p)))
        if gap <= tol or it >= max_iter:
            break
        it += 1
        ki = row(i % n)
        kj = row(j % n)
        kij = ki[j % n]
        ai_old, aj_old = a[i], a[j]
        if s[i] != s[j]:
            quad = 2.0 - 2.0 * kij if 2.0 - 2.0 * kij > 0 else _TAU
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0:
                if a[j] < 0:
                    a[j], a[i] = 0.0, diff
            elif a[i] < 0:
                a[i], a[j] = 0.0, -diff
            if diff > 0:
                if a[i] > c:
                    a[i], a[j] = c, c - diff
            elif a[j] > c:
                a[j], a[i] = c, c + diff
        else:
            quad = 2.0 - 2.0 * kij if 2.0 - 2.0 * kij > 0 else _TAU
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > c:
                if a[i] > c:
                    a[i], a[j] = c, total - c
            elif a[j] < 0:
                a[j], a[i] = 0.0, total
            if total > c:
                if a[j] > c:
                    a[j], a[i] = c, total - c
            elif a[i] < 0:
                a[i], a[j] = 0.0, total
        g = ki * ((a[i] - ai_old) * s[i]) + kj * ((a[j] - aj_old) * s[j])
        G[:n] += g
        G[n:] -= g

    yg = s * G
    at_upper = a >= c
    at_lower = a <= 0
    free = ~(at_upper | at_lower)
    if free.any():
        rho = float(yg[free].mean())
    else:
        ub_mask = (at_upper & (s < 0)) | (at_lower & (s > 0))
        lb_mask = (at_upper & (s > 0)) | (at_lower & (s < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = 0.5 * (ub + lb)
    return a[:n] - a[n:], rho, it, gap, np.asarray(trace)


def smo_solve(X, y, config: SvrConfig, *, debug: bool = False, jit: bool | None = None):
    """Raw solver on already-standardised rows.

    Returns ``(beta, rho, iterations, kkt_gap, objective_trace)``; the fitted
    function is ``f(x) = sum_i beta_i K(x_i, x) - rho``.  The trace (primal
    form of the doubled dual, non-increasing) is only filled when ``debug``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    use_gram = n <= config.full_gram_limit
    gram = rbf_gram(X, X, config.gamma) if use_gram else np.empty((0, 0))
    use_jit = _accel.USE_JIT if jit is None else jit
    solver = _smo_loop if use_jit else _smo_numpy
    beta, rho, it, gap, trace = solver(
        X, y, float(config.c), float(config.epsilon), float(config.tolerance), float(config.gamma),
        int(config.max_passes), gram, use_gram, int(config.cache_rows), bool(debug),
    )
    return np.asarray(beta), float(rho), int(it), float(gap), np.asarray(trace)


# ---------------------------------------------------------------------------
# model


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    keep: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, names: Sequence[str] | None = None) -> "Standardizer":
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        keep = std > 1e-12
        if not keep.all():
            dropped = [names[k] if names else str(k) for k in np.flatnonzero(~keep)]
            warnings.warn(f"dropping zero-variance feature columns: {dropped}", ZeroVarianceWarning, stacklevel=3)
        return cls(mean[keep], std[keep], keep)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X[:, self.keep] - self.mean) / self.scale


@dataclass
class SvrModel:
    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    config: SvrConfig
    feature_names: list[str]
    standardizer: Standardizer
    iterations: int = 0
    kkt_gap: float = 0.0
    converged: bool = True
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.n_features:
            raise DimensionMismatch(f"model expects {self.n_features} features, got {X.shape[1]}")
        if len(self.dual_coefficients) == 0:
            return np.full(X.shape[0], self.bias)
        Z = self.standardizer.transform(X)
        return rbf_gram(Z, self.support_vectors, self.config.gamma) @ self.dual_coefficients + self.bias

    def predict(self, X) -> np.ndarray:
        return np.clip(self.decision_function(X), RELEVANCE_MIN, RELEVANCE_MAX)

    # serialisation -------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "config": asdict(self.config),
            "feature_names": list(self.feature_names),
            "standardizer": {
                "mean": self.standardizer.mean.tolist(),
                "scale": self.standardizer.scale.tolist(),
                "keep": self.standardizer.keep.astype(bool).tolist(),
            },
            "bias": self.bias,
            "dual_coefficients": self.dual_coefficients.tolist(),
            "support_vectors": self.support_vectors.tolist(),
            "iterations": self.iterations,
            "kkt_gap": self.kkt_gap if np.isfinite(self.kkt_gap) else None,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvrModel":
        if d.get("format") != FORMAT_NAME:
            raise DataError("not an SVR model file")
        if d.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported SVR model version {d.get('version')}")
        st = d["standardizer"]
        keep = np.asarray(st["keep"], dtype=bool)
        sv = np.asarray(d["support_vectors"], dtype=np.float64).reshape(-1, int(keep.sum()))
        return cls(
            support_vectors=sv,
            dual_coefficients=np.asarray(d["dual_coefficients"], dtype=np.float64),
            bias=float(d["bias"]),
            config=SvrConfig(**d["config"]),
            feature_names=list(d["feature_names"]),
            standardizer=Standardizer(np.asarray(st["mean"], dtype=np.float64), np.asarray(st["scale"], dtype=np.float64), keep),
            iterations=int(d.get("iterations", 0)),
            kkt_gap=float(d["kkt_gap"]) if d.get("kkt_gap") is not None else float("inf"),
            converged=bool(d.get("converged", True)),
            degenerate=bool(d.get("degenerate", False)),
            extra=dict(d.get("extra", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "SvrModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def smo_train(
    features,
    labels,
    config: SvrConfig = SvrConfig(),
    feature_names: Sequence[str] | None = None,
    *,
    debug: bool = False,
) -> SvrModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"features {X.shape} and labels {y.shape} disagree")
    if y.shape[0] < 2:
        raise ValueError("need at least two training rows")
    names = list(feature_names) if feature_names is not None else [f"f{k}" for k in range(X.shape[1])]
    if len(names) != X.shape[1]:
        raise DimensionMismatch("feature_names length does not match feature columns")
    std = Standardizer.fit(X, names)

    if y.max() - y.min() <= 2.0 * config.epsilon:
        return SvrModel(np.empty((0, int(std.keep.sum()))), np.empty(0), 0.5 * float(y.max() + y.min()), config, names, std, degenerate=True)

    Z = std.transform(X)
    beta, rho, it, gap, trace = smo_solve(Z, y, config, debug=debug)
    converged = gap <= config.tolerance
    if not converged:
        warnings.warn(
            f"SMO stopped after {it} pair updates with KKT gap {gap:.3g} > {config.tolerance}",
            ConvergenceWarning,
            stacklevel=2,
        )
    sv = np.flatnonzero(beta != 0.0)
    model = SvrModel(Z[sv], beta[sv], -rho, config, names, std, iterations=it, kkt_gap=gap, converged=converged)
    if debug:
        model.extra["objective_trace"] = trace.tolist()
    return model


def predict(model: SvrModel, feature_row) -> float:
    row = np.asarray(feature_row, dtype=np.float64)
    if row.ndim != 1:
        raise DimensionMismatch("predict takes one feature row")
    return float(model.predict(row[None, :])[0])
