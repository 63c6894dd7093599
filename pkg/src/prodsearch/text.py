"""Text normalisation: number canonicalisation, tokenising, stopwords, spelling, stemming."""
from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _accel
from .porter import porter_stem

__all__ = [
    "PipelineConfig",
    "SpellDictionary",
    "TextPipeline",
    "canonicalize_numbers",
    "correct_token",
    "default_stopwords",
    "levenshtein",
    "porter_stem",
    "preprocess",
    "remove_stopwords",
    "tokenize",
]


def _read_data_lines(name: str) -> list[str]:
    text = resources.files("prodsearch").joinpath("data").joinpath(name).read_text(encoding="utf-8")
    return [ln.rstrip("\n") for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return frozenset(ln.strip() for ln in _read_data_lines("stopwords_en.txt"))


@lru_cache(maxsize=None)
def default_unit_synonyms() -> tuple[tuple[str, str], ...]:
    pairs = []
    for ln in _read_data_lines("unit_synonyms.tsv"):
        variant, canonical = ln.split("\t")
        pairs.append((variant.strip().lower(), canonical.strip().lower()))
    return tuple(pairs)


# ---------------------------------------------------------------------------
# tokenising

_TOKEN_RE = re.compile(r"[^\W_]+(?:(?<=\d)[./](?=\d)[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric runs; ``/`` and ``.`` survive only between digits."""
    if not text:
        return []
    return _TOKEN_RE.findall(text.lower())


def remove_stopwords(tokens: Sequence[str], stopwords: Iterable[str]) -> list[str]:
    stop = stopwords if isinstance(stopwords, (set, frozenset)) else set(stopwords)
    return [t for t in tokens if t not in stop]


# ---------------------------------------------------------------------------
# numbers

_THOUSANDS_RE = re.compile(r"(?<=\d),(?=\d{3}(?!\d))")
_DIGIT_ALPHA_RE = re.compile(r"(?<=\d)(?=[^\W\d_])|(?<=[^\W\d_])(?=\d)")


@lru_cache(maxsize=8)
def _unit_regex(synonyms: tuple[tuple[str, str], ...]) -> tuple[re.Pattern, dict[str, str]]:
    table = {v: c for v, c in synonyms}
    alternation = "|".join(re.escape(v) for v in sorted(table, key=len, reverse=True))
    # a unit word only counts as a unit right after a number
    pattern = re.compile(rf"(\d)[\s-]*({alternation})(?![^\W_])", re.IGNORECASE)
    return pattern, table


def canonicalize_numbers(text: str, synonyms: tuple[tuple[str, str], ...] | None = None) -> str:
    """Put numbers and the units that follow them into one spelling.

    >>> canonicalize_numbers("4ft")
    '4 ft'
    >>> canonicalize_numbers("1,000 Gallons")
    '1000 gal'
    """
    if not any(ch.isdigit() for ch in text):
        return text
    text = _THOUSANDS_RE.sub("", text)
    text = _DIGIT_ALPHA_RE.sub(" ", text)
    pattern, table = _unit_regex(synonyms if synonyms is not None else default_unit_synonyms())
    return pattern.sub(lambda m: f"{m.group(1)} {table[m.group(2).lower()]}", text)


# ---------------------------------------------------------------------------
# edit distance kernels
#
# Both kernels compute the distance from one query to every row of a padded
# word matrix and cap it at ``bound + 1``; the caps make the two paths agree
# exactly.


@_accel.njit
def _levenshtein_rows_loop(query, words, lengths, bound):
    n = words.shape[0]
    m = query.shape[0]
    out = np.empty(n, dtype=np.int64)
    for w in range(n):
        L = lengths[w]
        if abs(L - m) > bound:
            out[w] = bound + 1
            continue
        prev = np.arange(L + 1)
        cur = np.empty(L + 1, dtype=np.int64)
        too_far = False
        for i in range(m):
            cur[0] = i + 1
            row_min = cur[0]
            qi = query[i]
            for j in range(1, L + 1):
                cost = 0 if words[w, j - 1] == qi else 1
                v = prev[j - 1] + cost
                if prev[j] + 1 < v:
                    v = prev[j] + 1
                if cur[j - 1] + 1 < v:
                    v = cur[j - 1] + 1
                cur[j] = v
                if v < row_min:
                    row_min = v
            if row_min > bound:
                too_far = True
                break
            prev, cur = cur, prev
        if too_far:
            out[w] = bound + 1
        else:
            d = prev[L]
            out[w] = d if d <= bound else bound + 1
    return out


def _levenshtein_rows_numpy(query, words, lengths, bound):
    n, width = words.shape
    steps = np.arange(width + 1)
    prev = np.broadcast_to(steps, (n, width + 1)).copy()
    for i in range(query.shape[0]):
        mismatch = (words != query[i]).astype(np.int64)
        base = np.empty_like(prev)
        base[:, 0] = i + 1
        base[:, 1:] = np.minimum(prev[:, 1:] + 1, prev[:, :-1] + mismatch)
        # cur[j] = min_k<=j (base[k] + j - k): the insertion chain as a running min
        prev = np.minimum.accumulate(base - steps, axis=1) + steps
    d = prev[np.arange(n), lengths]
    return np.minimum(d, bound + 1)


def _levenshtein_rows(query, words, lengths, bound):
    if _accel.USE_JIT:
        return _levenshtein_rows_loop(query, words, lengths, bound)
    return _levenshtein_rows_numpy(query, words, lengths, bound)


def _encode(s: str) -> np.ndarray:
    return np.fromiter((ord(c) for c in s), dtype=np.int64, count=len(s))


def _encode_matrix(words: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.array([len(w) for w in words], dtype=np.int64)
    width = int(lengths.max()) if len(words) else 0
    mat = np.full((len(words), width), -1, dtype=np.int64)
    for r, w in enumerate(words):
        mat[r, : len(w)] = [ord(c) for c in w]
    return mat, lengths


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character insertions, deletions and substitutions."""
    words, lengths = _encode_matrix([b])
    bound = len(a) + len(b)
    return int(_levenshtein_rows(_encode(a), words, lengths, bound)[0])


# ---------------------------------------------------------------------------
# spelling correction


class SpellDictionary:
    """Term frequencies with words bucketed by length for bounded search."""

    def __init__(self, frequencies: Mapping[str, int]):
        self.frequencies = dict(frequencies)
        buckets: dict[int, list[str]] = {}
        for w in sorted(self.frequencies):
            buckets.setdefault(len(w), []).append(w)
        self._buckets = {L: (ws, _encode_matrix(ws)) for L, ws in buckets.items()}
        self._cache: dict[tuple[str, int], str] = {}

    @classmethod
    def from_token_streams(cls, streams: Iterable[Sequence[str]]) -> "SpellDictionary":
        counts: Counter = Counter()
        for toks in streams:
            counts.update(t for t in toks if t.isalpha())
        return cls(counts)

    def __contains__(self, token: str) -> bool:
        return token in self.frequencies

    def __len__(self) -> int:
        return len(self.frequencies)

    def correct(self, token: str, max_edit_distance: int = 2) -> str:
        if token in self.frequencies or max_edit_distance <= 0:
            return token
        key = (token, max_edit_distance)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        q = _encode(token)
        best: tuple[int, int, str] | None = None
        for L in range(max(1, len(token) - max_edit_distance), len(token) + max_edit_distance + 1):
            bucket = self._buckets.get(L)
            if bucket is None:
                continue
            ws, (mat, lengths) = bucket
            dist = _levenshtein_rows(q, mat, lengths, max_edit_distance)
            for idx in np.flatnonzero(dist <= max_edit_distance):
                cand = (int(dist[idx]), -self.frequencies[ws[idx]], ws[idx])
                if best is None or cand < best:
                    best = cand
        result = token if best is None else best[2]
        self._cache[key] = result
        return result


def correct_token(token: str, dictionary: Mapping[str, int] | SpellDictionary, max_edit_distance: int = 2) -> str:
    """Nearest dictionary term within ``max_edit_distance``.

    Ties go to the more frequent term, then the lexicographically smaller one.
    Tokens already in the dictionary, or with nothing close enough, come back
    unchanged.
    """
    if not isinstance(dictionary, SpellDictionary):
        dictionary = SpellDictionary(dictionary)
    return dictionary.correct(token, max_edit_distance)


# ---------------------------------------------------------------------------
# full pipeline


@dataclass(frozen=True)
class PipelineConfig:
    stopwords: frozenset = field(default_factory=default_stopwords)
    remove_stopwords: bool = True
    stem: bool = True
    spell_correct: bool = True
    max_edit_distance: int = 2
    canonicalize_numbers: bool = True
    unit_synonyms: tuple = field(default_factory=default_unit_synonyms)

    def __post_init__(self):
        if self.max_edit_distance < 0:
            raise ValueError("max_edit_distance must be >= 0")
        if self.remove_stopwords and not self.stopwords:
            raise ValueError("stopword removal enabled with an empty stopword set")
        object.__setattr__(self, "stopwords", frozenset(self.stopwords))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for part in (
            ",".join(sorted(self.stopwords)),
            str(self.remove_stopwords),
            str(self.stem),
            str(self.spell_correct),
            str(self.max_edit_distance),
            str(self.canonicalize_numbers),
            ";".join(f"{v}={c}" for v, c in self.unit_synonyms),
        ):
            h.update(part.encode("utf-8"))
            h.update(b"\x00")
        return h.hexdigest()[:16]


def _surface_tokens(text: str, config: PipelineConfig) -> list[str]:
    if config.canonicalize_numbers:
        text = canonicalize_numbers(text, config.unit_synonyms)
    tokens = tokenize(text)
    if config.remove_stopwords:
        tokens = remove_stopwords(tokens, config.stopwords)
    return tokens


def preprocess(
    text: str,
    config: PipelineConfig | None = None,
    dictionary: SpellDictionary | None = None,
    query: bool = False,
) -> list[str]:
    """canonicalise numbers -> tokenize -> drop stopwords -> spell-correct (queries) -> stem."""
    config = config or PipelineConfig()
    tokens = _surface_tokens(text, config)
    if query and config.spell_correct and dictionary is not None:
        tokens = [
            dictionary.correct(t, config.max_edit_distance) if t.isalpha() else t
            for t in tokens
        ]
    if config.stem:
        tokens = [porter_stem(t) for t in tokens]
    return tokens


class TextPipeline:
    """A config plus the spelling dictionary built from product text."""

    def __init__(self, config: PipelineConfig | None = None, dictionary: SpellDictionary | None = None):
        self.config = config or PipelineConfig()
        self.dictionary = dictionary

    @classmethod
    def fit(cls, product_texts: Iterable[str], config: PipelineConfig | None = None) -> "TextPipeline":
        config = config or PipelineConfig()
        dictionary = None
        if config.spell_correct:
            dictionary = SpellDictionary.from_token_streams(_surface_tokens(t, config) for t in product_texts)
        return cls(config, dictionary)

    def document(self, text: str) -> list[str]:
        return preprocess(text, self.config)

    def query(self, text: str) -> list[str]:
        return preprocess(text, self.config, self.dictionary, query=True)
