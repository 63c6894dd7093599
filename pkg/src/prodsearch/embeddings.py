"""Skipgram word vectors and PV-DBOW paragraph vectors, trained with negative sampling.

Both models share one update: an input row ``h`` (a centre word's vector, or a
document's vector) is pushed towards the output vector of an observed word and
away from sampled noise words.  For one such pair the loss is::

    -log sigma(h . u_pos) - sum_k log sigma(-h . u_neg_k)

and every update is a single simultaneous SGD step on that loss (all dot
products are taken before any vector moves).

Randomness (subsampling, window shrinking, noise words) comes from the 64-bit
linear congruential generator used by the original word2vec tool, so the
numba and numpy paths consume identical random streams.
"""
from __future__ import annotations

import logging
import math
import warnings
import zlib
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from .corpus import RELEVANCE_MAX, RELEVANCE_MIN
from .errors import AllTokensUnknown, DimensionMismatch, EmptyDocument, EmptyVocabulary, ZeroVector

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
_LCG_A = 25214903917
_LCG_C = 11
TABLE_SIZE = 1_000_000
FALLBACK_SCORE = 2.0


@dataclass(frozen=True)
class SkipgramConfig:
    dimension: int = 100
    window: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    min_count: int = 5
    subsample_threshold: float = 1e-3
    seed: int = 1
    workers: int = 1

    def __post_init__(self):
        for name in ("dimension", "window", "negatives", "epochs", "min_count", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.initial_learning_rate > 0:
            raise ValueError("initial_learning_rate must be > 0")
        if self.subsample_threshold < 0:
            raise ValueError("subsample_threshold must be >= 0")


# ---------------------------------------------------------------------------
# loss and gradients of a single pair (reference form; kernels inline the same maths)


def _log_sigmoid_neg(x):
    """-log sigma(x), computed without overflow."""
    return np.logaddexp(0.0, -x)


def sgns_pair_loss(h: np.ndarray, u_pos: np.ndarray, u_neg: np.ndarray):
    """Loss of one (input, positive, negatives) triple and its gradients.

    Returns ``(loss, d_h, d_u_pos, d_u_neg)``.
    """
    u_neg = np.atleast_2d(u_neg)
    fp = float(h @ u_pos)
    fn = u_neg @ h
    loss = float(_log_sigmoid_neg(fp) + _log_sigmoid_neg(-fn).sum())
    sp = 1.0 / (1.0 + math.exp(-fp))
    sn = 1.0 / (1.0 + np.exp(-fn))
    d_h = -(1.0 - sp) * u_pos + sn @ u_neg
    d_u_pos = -(1.0 - sp) * h
    d_u_neg = np.outer(sn, h)
    return loss, d_h, d_u_pos, d_u_neg


def pv_dbow_doc_loss(doc_vec: np.ndarray, W_out: np.ndarray, words: Sequence[int], noise: Sequence[Sequence[int]]):
    """Summed pair loss of one document and gradients w.r.t. its vector and the output matrix."""
    loss = 0.0
    g_doc = np.zeros_like(doc_vec)
    g_out = np.zeros_like(W_out)
    for w, negs in zip(words, noise):
        negs = list(negs)
        l, dh, dpos, dneg = sgns_pair_loss(doc_vec, W_out[w], W_out[negs])
        loss += l
        g_doc += dh
        g_out[w] += dpos
        np.add.at(g_out, negs, dneg)
    return loss, g_doc, g_out


# ---------------------------------------------------------------------------
# kernels


@_accel.njit
def _pair_step_loop(H, hrow, W_out, targets, ntargets, alpha, update_out, grad, fbuf):
    d = H.shape[1]
    loss = 0.0
    for k in range(ntargets):
        t = targets[k]
        f = 0.0
        for q in range(d):
            f += H[hrow, q] * W_out[t, q]
        fbuf[k] = f
    for q in range(d):
        grad[q] = 0.0
    for k in range(ntargets):
        f = fbuf[k]
        label = 1.0 if k == 0 else 0.0
        x = f if k == 0 else -f
        if x > 0:
            loss += math.log1p(math.exp(-x))
        else:
            loss += -x + math.log1p(math.exp(x))
        sig = 1.0 / (1.0 + math.exp(-f))
        g = (label - sig) * alpha
        fbuf[k] = g
        t = targets[k]
        for q in range(d):
            grad[q] += g * W_out[t, q]
    if update_out:
        for k in range(ntargets):
            g = fbuf[k]
            t = targets[k]
            for q in range(d):
                W_out[t, q] += g * H[hrow, q]
    for q in range(d):
        H[hrow, q] += grad[q]
    return loss


@_accel.njit
def _draw_negatives(state, table, positive, negatives, targets):
    targets[0] = positive
    n = 1
    for _ in range(negatives):
        state = state * np.uint64(_LCG_A) + np.uint64(_LCG_C)
        t = table[np.int64((state >> np.uint64(16)) % np.uint64(table.shape[0]))]
        if t == positive:
            continue
        targets[n] = t
        n += 1
    return state, n


@_accel.njit
def _subsample(state, ids, lo, hi, keep_prob, out):
    n = 0
    for p in range(lo, hi):
        state = state * np.uint64(_LCG_A) + np.uint64(_LCG_C)
        r = np.float64(state & np.uint64(0xFFFF)) / 65536.0
        if keep_prob[ids[p]] >= r:
            out[n] = ids[p]
            n += 1
    return state, n


@_accel.njit
def _sgns_run_loop(ids, bounds, W_in, W_out, keep_prob, table, window, negatives,
                   alpha0, progress, total, state, sent_lo, sent_hi):
    d = W_in.shape[1]
    targets = np.empty(negatives + 1, dtype=np.int64)
    fbuf = np.empty(negatives + 1)
    grad = np.empty(d)
    kept = np.empty(ids.shape[0] if ids.shape[0] > 0 else 1, dtype=np.int64)
    loss = 0.0
    pairs = 0
    for s in range(sent_lo, sent_hi):
        lo = bounds[s]
        hi = bounds[s + 1]
        state, n = _subsample(state, ids, lo, hi, keep_prob, kept)
        for i in range(n):
            alpha = alpha0 * max(1.0 - (progress + i * (hi - lo) / max(n, 1)) / (total + 1.0), 1e-4)
            state = state * np.uint64(_LCG_A) + np.uint64(_LCG_C)
            b = np.int64(state % np.uint64(window))
            for a in range(b, 2 * window + 1 - b):
                if a == window:
                    continue
                c = i - window + a
                if c < 0 or c >= n:
                    continue
                state, nt = _draw_negatives(state, table, kept[c], negatives, targets)
                loss += _pair_step_loop(W_in, kept[i], W_out, targets, nt, alpha, True, grad, fbuf)
                pairs += 1
        progress += hi - lo
    return loss, pairs, state, progress


@_accel.njit
def _pvdbow_run_loop(ids, bounds, D, W_out, keep_prob, table, negatives,
                     alpha0, progress, total, state, doc_lo, doc_hi, update_out):
    d = D.shape[1]
    targets = np.empty(negatives + 1, dtype=np.int64)
    fbuf = np.empty(negatives + 1)
    grad = np.empty(d)
    kept = np.empty(ids.shape[0] if ids.shape[0] > 0 else 1, dtype=np.int64)
    loss = 0.0
    pairs = 0
    for s in range(doc_lo, doc_hi):
        lo = bounds[s]
        hi = bounds[s + 1]
        state, n = _subsample(state, ids, lo, hi, keep_prob, kept)
        for i in range(n):
            alpha = alpha0 * max(1.0 - (progress + i * (hi - lo) / max(n, 1)) / (total + 1.0), 1e-4)
            state, nt = _draw_negatives(state, table, kept[i], negatives, targets)
            loss += _pair_step_loop(D, s, W_out, targets, nt, alpha, update_out, grad, fbuf)
            pairs += 1
        progress += hi - lo
    return loss, pairs, state, progress


@_accel.njit_parallel
def _sgns_parallel(ids, bounds, W_in, W_out, keep_prob, table, window, negatives,
                   alpha0, progress, total, states, chunks):
    nchunks = states.shape[0]
    losses = np.zeros(nchunks)
    pairs = np.zeros(nchunks, dtype=np.int64)
    for c in _accel.prange(nchunks):
        offset = progress + bounds[chunks[c]] - bounds[0]
        l, p, st, _ = _sgns_run_loop(ids, bounds, W_in, W_out, keep_prob, table, window, negatives,
                                     alpha0, offset, total, states[c], chunks[c], chunks[c + 1])
        losses[c] = l
        pairs[c] = p
        states[c] = st
    return losses.sum(), pairs.sum()


# numpy path: same random stream and update order, vector maths per pair


def _lcg(state: int) -> int:
    return (state * _LCG_A + _LCG_C) & _MASK64


def _pair_step_numpy(H, hrow, W_out, targets, alpha, update_out):
    h = H[hrow].copy()
    U = W_out[targets]
    f = U @ h
    labels = np.zeros(len(targets))
    labels[0] = 1.0
    x = np.where(labels > 0, f, -f)
    loss = float(np.logaddexp(0.0, -x).sum())
    g = (labels - 1.0 / (1.0 + np.exp(-f))) * alpha
    grad = g @ U
    if update_out:
        np.add.at(W_out, targets, np.outer(g, h))
    H[hrow] += grad
    return loss


def _subsample_numpy(state, ids, lo, hi, keep_prob):
    kept = []
    for p in range(lo, hi):
        state = _lcg(state)
        if keep_prob[ids[p]] >= (state & 0xFFFF) / 65536.0:
            kept.append(int(ids[p]))
    return state, kept


def _negatives_numpy(state, table, positive, negatives):
    targets = [positive]
    size = table.shape[0]
    for _ in range(negatives):
        state = _lcg(state)
        t = int(table[(state >> 16) % size])
        if t != positive:
            targets.append(t)
    return state, np.asarray(targets, dtype=np.int64)


def _sgns_run_numpy(ids, bounds, W_in, W_out, keep_prob, table, window, negatives,
                    alpha0, progress, total, state, sent_lo, sent_hi):
    loss = 0.0
    pairs = 0
    state = int(state)
    for s in range(sent_lo, sent_hi):
        lo, hi = int(bounds[s]), int(bounds[s + 1])
        state, kept = _subsample_numpy(state, ids, lo, hi, keep_prob)
        n = len(kept)
        for i in range(n):
            alpha = alpha0 * max(1.0 - (progress + i * (hi - lo) / max(n, 1)) / (total + 1.0), 1e-4)
            state = _lcg(state)
            b = state % window
            for a in range(b, 2 * window + 1 - b):
                c = i - window + a
                if a == window or c < 0 or c >= n:
                    continue
                state, targets = _negatives_numpy(state, table, kept[c], negatives)
                loss += _pair_step_numpy(W_in, kept[i], W_out, targets, alpha, True)
                pairs += 1
        progress += hi - lo
    return loss, pairs, state, progress


def _pvdbow_run_numpy(ids, bounds, D, W_out, keep_prob, table, negatives,
                      alpha0, progress, total, state, doc_lo, doc_hi, update_out):
    loss = 0.0
    pairs = 0
    state = int(state)
    for s in range(doc_lo, doc_hi):
        lo, hi = int(bounds[s]), int(bounds[s + 1])
        state, kept = _subsample_numpy(state, ids, lo, hi, keep_prob)
        n = len(kept)
        for i in range(n):
            alpha = alpha0 * max(1.0 - (progress + i * (hi - lo) / max(n, 1)) / (total + 1.0), 1e-4)
            state, targets = _negatives_numpy(state, table, kept[i], negatives)
            loss += _pair_step_numpy(D, s, W_out, targets, alpha, update_out)
            pairs += 1
        progress += hi - lo
    return loss, pairs, state, progress


# ---------------------------------------------------------------------------
# vocabulary and sampling tables


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: np.ndarray

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def build(cls, streams: Iterable[Sequence[str]], min_count: int) -> "Vocabulary":
        counts: Counter = Counter()
        for toks in streams:
            counts.update(toks)
        kept = sorted(((t, c) for t, c in counts.items() if c >= min_count), key=lambda kv: (-kv[1], kv[0]))
        if not kept:
            raise EmptyVocabulary(f"no token occurs at least {min_count} times")
        return cls([t for t, _ in kept], np.array([c for _, c in kept], dtype=np.int64))

    def encode(self, streams: Iterable[Sequence[str]]) -> tuple[np.ndarray, np.ndarray]:
        """Concatenated in-vocabulary ids and sentence offsets (len = sentences + 1)."""
        ids: list[int] = []
        bounds = [0]
        for toks in streams:
            ids.extend(self.index[t] for t in toks if t in self.index)
            bounds.append(len(ids))
        return np.asarray(ids, dtype=np.int64), np.asarray(bounds, dtype=np.int64)

    def keep_probabilities(self, threshold: float) -> np.ndarray:
        if threshold <= 0:
            return np.full(len(self), 2.0)
        total = float(self.counts.sum())
        z = threshold * total
        c = self.counts.astype(np.float64)
        return (np.sqrt(c / z) + 1.0) * z / c

    def noise_table(self, size: int = TABLE_SIZE) -> np.ndarray:
        """Unigram^0.75 lookup table for drawing noise words."""
        p = self.counts.astype(np.float64) ** 0.75
        cum = np.cumsum(p) / p.sum()
        table = np.searchsorted(cum, (np.arange(size) + 0.5) / size, side="right")
        return np.minimum(table, len(self) - 1).astype(np.int64)


def _seed_state(seed: int, salt: int = 0) -> int:
    return (int(seed) * 0x9E3779B97F4A7C15 + salt + 1) & _MASK64


# ---------------------------------------------------------------------------
# tables


class EmbeddingTable:
    """Token -> dense vector lookup."""

    def __init__(self, tokens: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens):
            raise ValueError("vectors must have one row per token")
        if not np.all(np.isfinite(vectors)):
            raise ValueError("embedding vectors must be finite")
        self.tokens = list(tokens)
        self.vectors = vectors
        self.index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def vocab_size(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def __getitem__(self, token: str) -> np.ndarray:
        return self.vectors[self.index[token]]

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{self.vocab_size} {self.dimension}\n")
            for t, v in zip(self.tokens, self.vectors):
                fh.write(t + " " + " ".join(repr(float(x)) for x in v) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as fh:
            n, d = (int(x) for x in fh.readline().split())
            tokens = []
            vectors = np.empty((n, d))
            for i in range(n):
                parts = fh.readline().rstrip("\n").split(" ")
                if len(parts) != d + 1:
                    raise ValueError(f"{path}: line {i + 2} has {len(parts) - 1} values, expected {d}")
                tokens.append(parts[0])
                vectors[i] = [float(x) for x in parts[1:]]
        return cls(tokens, vectors)


@dataclass
class TrainingLog:
    epoch_loss: list[float]
    pairs_per_epoch: list[int]


def _init_input(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    return (rng.random((rows, dim)) - 0.5) / dim


def train_skipgram(
    token_streams: Sequence[Sequence[str]],
    config: SkipgramConfig = SkipgramConfig(),
    *,
    jit: bool | None = None,
    return_log: bool = False,
):
    """Skipgram with negative sampling over pre-tokenised sentences."""
    vocab = Vocabulary.build(token_streams, config.min_count)
    ids, bounds = vocab.encode(token_streams)
    rng = np.random.default_rng(config.seed)
    W_in = _init_input(rng, len(vocab), config.dimension)
    W_out = np.zeros((len(vocab), config.dimension))
    keep = vocab.keep_probabilities(config.subsample_threshold)
    table = vocab.noise_table()
    total = float(config.epochs * len(ids))
    use_jit = _accel.USE_JIT if jit is None else jit
    workers = config.workers
    if workers > 1 and not use_jit:
        warnings.warn("parallel training needs numba; running single-threaded", RuntimeWarning, stacklevel=2)
        workers = 1

    state = _seed_state(config.seed)
    n_sent = len(bounds) - 1
    progress = 0.0
    epoch_loss, epoch_pairs = [], []
    for epoch in range(config.epochs):
        if workers > 1:
            chunks = np.linspace(0, n_sent, workers + 1).astype(np.int64)
            states = np.array([_seed_state(config.seed, 1000 * epoch + c) for c in range(workers)], dtype=np.uint64)
            loss, pairs = _sgns_parallel(ids, bounds, W_in, W_out, keep, table, config.window, config.negatives,
                                         config.initial_learning_rate, progress, total, states, chunks)
            progress += len(ids)
        else:
            run = _sgns_run_loop if use_jit else _sgns_run_numpy
            st = np.uint64(state) if use_jit else state
            loss, pairs, st, progress = run(ids, bounds, W_in, W_out, keep, table, config.window, config.negatives,
                                            config.initial_learning_rate, progress, total, st, 0, n_sent)
            state = int(st)
        epoch_loss.append(float(loss) / max(int(pairs), 1))
        epoch_pairs.append(int(pairs))
        log.debug("skipgram epoch %d: mean pair loss %.5f over %d pairs", epoch, epoch_loss[-1], pairs)
    table_out = EmbeddingTable(vocab.tokens, W_in)
    if return_log:
        return table_out, TrainingLog(epoch_loss, epoch_pairs)
    return table_out


# ---------------------------------------------------------------------------
# scoring


def average_vector(tokens: Sequence[str], table: EmbeddingTable) -> np.ndarray:
    rows = [table.index[t] for t in tokens if t in table.index]
    if not rows:
        raise AllTokensUnknown("none of the tokens are in the vocabulary")
    return table.vectors[rows].mean(axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cannot compare vectors of shape {u.shape} and {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine of a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def similarity_to_relevance(cos: float, clamp_tol: float = 1e-9) -> float:
    """Affine map of [-1, 1] onto the relevance scale [1, 3]."""
    if not (-1.0 - clamp_tol <= cos <= 1.0 + clamp_tol):
        raise ValueError(f"similarity {cos} outside [-1, 1]")
    cos = min(max(cos, -1.0), 1.0)
    return cos + 2.0


def score_word2vec(query_tokens: Sequence[str], description_tokens: Sequence[str], table: EmbeddingTable) -> float:
    try:
        q = average_vector(query_tokens, table)
        d = average_vector(description_tokens, table)
        return similarity_to_relevance(cosine(q, d))
    except (AllTokensUnknown, ZeroVector):
        return FALLBACK_SCORE


def word2vec_similarity(query_tokens: Sequence[str], description_tokens: Sequence[str], table: EmbeddingTable) -> float | None:
    """Raw cosine of the averaged vectors, None when either side has nothing known."""
    try:
        return cosine(average_vector(query_tokens, table), average_vector(description_tokens, table))
    except (AllTokensUnknown, ZeroVector):
        return None


# ---------------------------------------------------------------------------
# paragraph vectors


class ParagraphVectors:
    """Document vectors plus the frozen output layer needed to infer new ones."""

    def __init__(self, doc_ids: Sequence, doc_vectors: np.ndarray, output: EmbeddingTable, config: SkipgramConfig):
        self.doc_ids = list(doc_ids)
        self.doc_vectors = np.asarray(doc_vectors, dtype=np.float64)
        self.output = output
        self.config = config
        self.row = {d: i for i, d in enumerate(self.doc_ids)}
        self._vocab = Vocabulary(output.tokens, np.ones(len(output.tokens), dtype=np.int64))
        self._counts: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.doc_vectors.shape[1]

    def vector(self, doc_id) -> np.ndarray:
        return self.doc_vectors[self.row[doc_id]]

    def infer(self, tokens: Sequence[str], epochs: int | None = None, *, jit: bool | None = None) -> np.ndarray:
        """Fit a fresh document vector to ``tokens`` with the output layer frozen."""
        ids, bounds = self._vocab.encode([tokens])
        if len(ids) == 0:
            raise EmptyDocument("no in-vocabulary tokens to infer from")
        cfg = self.config
        epochs = epochs or cfg.epochs
        salt = zlib.crc32(" ".join(tokens).encode("utf-8"))
        rng = np.random.default_rng([cfg.seed, salt])
        D = _init_input(rng, 1, cfg.dimension)
        keep = np.full(len(self._vocab), 2.0)  # no subsampling at inference
        table = self._noise_table()
        total = float(epochs * len(ids))
        state = _seed_state(cfg.seed, salt)
        progress = 0.0
        use_jit = _accel.USE_JIT if jit is None else jit
        run = _pvdbow_run_loop if use_jit else _pvdbow_run_numpy
        W_out = self.output.vectors
        for _ in range(epochs):
            st = np.uint64(state) if use_jit else state
            _, _, st, progress = run(ids, bounds, D, W_out, keep, table, cfg.negatives,
                                     cfg.initial_learning_rate, progress, total, st, 0, 1, False)
            state = int(st)
        return D[0].copy()

    def _noise_table(self) -> np.ndarray:
        if self._counts is None:
            raise RuntimeError("noise distribution unavailable; set via set_counts()")
        return Vocabulary(self.output.tokens, self._counts).noise_table()

    def set_counts(self, counts: np.ndarray) -> None:
        self._counts = np.asarray(counts, dtype=np.int64)

    def score(self, query_tokens: Sequence[str], doc_id) -> float:
        try:
            q = self.infer(query_tokens)
            return similarity_to_relevance(cosine(self.vector(doc_id), q))
        except (EmptyDocument, ZeroVector):
            return FALLBACK_SCORE

    def similarity(self, query_tokens: Sequence[str], doc_id) -> float | None:
        try:
            return cosine(self.vector(doc_id), self.infer(query_tokens))
        except (EmptyDocument, ZeroVector):
            return None

    def save(self, prefix: str | Path) -> None:
        """Writes ``<prefix>.docs.txt`` (doc vectors) and ``<prefix>.out.txt`` (output layer + counts)."""
        prefix = str(prefix)
        EmbeddingTable([f"doc_{d}" for d in self.doc_ids], self.doc_vectors).save(prefix + ".docs.txt")
        self.output.save(prefix + ".out.txt")
        counts = self._counts if self._counts is not None else np.ones(len(self.output.tokens), dtype=np.int64)
        Path(prefix + ".counts.txt").write_text("\n".join(str(int(c)) for c in counts) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, prefix: str | Path, config: SkipgramConfig) -> "ParagraphVectors":
        prefix = str(prefix)
        docs = EmbeddingTable.load(prefix + ".docs.txt")
        out = EmbeddingTable.load(prefix + ".out.txt")
        if docs.dimension != out.dimension:
            raise DimensionMismatch("document and output layers disagree on dimension")
        ids = [int(t[4:]) if t[4:].lstrip("-").isdigit() else t[4:] for t in docs.tokens]
        pv = cls(ids, docs.vectors, out, replace(config, dimension=docs.dimension))
        counts = [int(x) for x in Path(prefix + ".counts.txt").read_text(encoding="utf-8").split()]
        pv.set_counts(np.asarray(counts, dtype=np.int64))
        return pv


def train_paragraph_vectors(
    documents: Mapping[object, Sequence[str]],
    config: SkipgramConfig = SkipgramConfig(),
    *,
    jit: bool | None = None,
    return_log: bool = False,
):
    """PV-DBOW: each document vector learns to predict the document's words."""
    doc_ids = list(documents)
    streams = [documents[d] for d in doc_ids]
    for d, toks in zip(doc_ids, streams):
        if len(toks) == 0:
            raise EmptyDocument(f"document {d!r} has no tokens")
    vocab = Vocabulary.build(streams, config.min_count)
    ids, bounds = vocab.encode(streams)
    rng = np.random.default_rng(config.seed)
    D = _init_input(rng, len(doc_ids), config.dimension)
    W_out = np.zeros((len(vocab), config.dimension))
    keep = vocab.keep_probabilities(config.subsample_threshold)
    table = vocab.noise_table()
    total = float(config.epochs * len(ids))
    use_jit = _accel.USE_JIT if jit is None else jit
    run = _pvdbow_run_loop if use_jit else _pvdbow_run_numpy
    state = _seed_state(config.seed, 7)
    progress = 0.0
    epoch_loss, epoch_pairs = [], []
    for _ in range(config.epochs):
        st = np.uint64(state) if use_jit else state
        loss, pairs, st, progress = run(ids, bounds, D, W_out, keep, table, config.negatives,
                                        config.initial_learning_rate, progress, total, st, 0, len(doc_ids), True)
        state = int(st)
        epoch_loss.append(float(loss) / max(int(pairs), 1))
        epoch_pairs.append(int(pairs))
    pv = ParagraphVectors(doc_ids, D, EmbeddingTable(vocab.tokens, W_out), config)
    pv.set_counts(vocab.counts)
    if return_log:
        return pv, TrainingLog(epoch_loss, epoch_pairs)
    return pv
