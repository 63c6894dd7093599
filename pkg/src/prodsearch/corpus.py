"""Loading the train/test, description and attribute tables."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .errors import MalformedRow, MissingDescription, RelevanceOutOfRange
from .text import PipelineConfig, preprocess

log = logging.getLogger(__name__)

RELEVANCE_MIN = 1.0
RELEVANCE_MAX = 3.0

FIELDS = ("title", "description", "attributes")


@dataclass(frozen=True)
class ProductRecord:
    product_uid: int
    title: str
    description: str
    attributes: tuple[tuple[str, str], ...] = ()

    def attribute_text(self) -> str:
        """``name value`` pairs joined in source order."""
        return " ".join(f"{name} {value}" for name, value in self.attributes)

    def field_text(self, name: str) -> str:
        if name == "title":
            return self.title
        if name == "description":
            return self.description
        if name == "attributes":
            return self.attribute_text()
        raise KeyError(name)


@dataclass(frozen=True)
class LabeledInstance:
    id: int
    product_uid: int
    search_term: str
    relevance: float | None = None


@dataclass
class CorpusStats:
    num_products: int
    unique_unigrams_per_field: dict[str, int]
    word_count_range_per_field: dict[str, tuple[int, int] | None]
    term_frequency_range_per_field: dict[str, tuple[int, int] | None] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "num_products": self.num_products,
            "unique_unigrams_per_field": dict(self.unique_unigrams_per_field),
            "word_count_range_per_field": {
                k: (list(v) if v else None) for k, v in self.word_count_range_per_field.items()
            },
            "term_frequency_range_per_field": {
                k: (list(v) if v else None) for k, v in self.term_frequency_range_per_field.items()
            },
        }


# ---------------------------------------------------------------------------
# csv reading


def _open_text(path: Path):
    # Kaggle's Home Depot dump is not clean UTF-8; fall back to latin-1 rather than fail.
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            fh.read()
        return open(path, encoding="utf-8", newline="")
    except UnicodeDecodeError:
        log.warning("%s is not valid UTF-8, reading as latin-1", path)
        return open(path, encoding="latin-1", newline="")


def _read_rows(path: str | Path, required: Sequence[str], optional: Sequence[str] = ()) -> Iterator[tuple[int, dict]]:
    """Yield (line number, row) with lowercased header names."""
    path = Path(path)
    with _open_text(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(path, 1, "missing header") from None
        names = [h.strip().lower() for h in header]
        missing = [c for c in required if c not in names]
        if missing:
            raise MalformedRow(path, 1, f"missing columns {missing}")
        wanted = list(required) + [c for c in optional if c in names]
        pos = {c: names.index(c) for c in wanted}
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(names):
                raise MalformedRow(path, line, f"expected {len(names)} fields, got {len(row)}")
            yield line, {c: row[i] for c, i in pos.items()}


def _parse_int(value: str, path, line: int, column: str) -> int:
    try:
        return int(float(value)) if "." in value else int(value)
    except ValueError:
        raise MalformedRow(path, line, f"{column}={value!r} is not an integer") from None


def load_instances(path: str | Path) -> list[LabeledInstance]:
    """Train or test table; ``relevance`` is None when the column is absent."""
    out = []
    for line, row in _read_rows(path, ("id", "product_uid", "search_term"), ("relevance", "product_title")):
        iid = _parse_int(row["id"], path, line, "id")
        uid = _parse_int(row["product_uid"], path, line, "product_uid")
        rel = None
        if "relevance" in row and row["relevance"].strip():
            try:
                rel = float(row["relevance"])
            except ValueError:
                raise MalformedRow(path, line, f"relevance={row['relevance']!r}") from None
            if not math.isfinite(rel) or not RELEVANCE_MIN <= rel <= RELEVANCE_MAX:
                raise RelevanceOutOfRange(iid, rel)
        out.append(LabeledInstance(iid, uid, row["search_term"], rel))
    return out


def _load_titles(path: str | Path) -> dict[int, str]:
    titles: dict[int, str] = {}
    for line, row in _read_rows(path, ("product_uid", "product_title")):
        uid = _parse_int(row["product_uid"], path, line, "product_uid")
        titles.setdefault(uid, row["product_title"])
    return titles


def load_tables(
    train_path: str | Path,
    descriptions_path: str | Path,
    attributes_path: str | Path | None,
    extra_paths: Iterable[str | Path] = (),
) -> tuple[list[LabeledInstance], dict[int, ProductRecord]]:
    """Join the instance table with descriptions and attributes.

    The product mapping holds every product referenced by ``train_path`` or
    any of ``extra_paths`` (typically the test table); only the instances of
    ``train_path`` are returned.
    """
    instances = load_instances(train_path)
    titles = _load_titles(train_path)
    for p in extra_paths:
        for uid, t in _load_titles(p).items():
            titles.setdefault(uid, t)

    descriptions: dict[int, str] = {}
    for line, row in _read_rows(descriptions_path, ("product_uid", "product_description")):
        uid = _parse_int(row["product_uid"], descriptions_path, line, "product_uid")
        if uid in titles:
            descriptions[uid] = row["product_description"]

    attributes: dict[int, list[tuple[str, str]]] = {}
    if attributes_path is not None:
        for line, row in _read_rows(attributes_path, ("product_uid", "name", "value")):
            raw = row["product_uid"].strip()
            if not raw:
                continue
            uid = _parse_int(raw, attributes_path, line, "product_uid")
            if uid in titles:
                attributes.setdefault(uid, []).append((row["name"], row["value"]))

    products: dict[int, ProductRecord] = {}
    for uid in sorted(titles):
        if uid not in descriptions:
            raise MissingDescription(uid)
        products[uid] = ProductRecord(uid, titles[uid], descriptions[uid], tuple(attributes.get(uid, ())))
    return instances, products


# ---------------------------------------------------------------------------
# statistics


def corpus_stats(
    products: Mapping[int, ProductRecord],
    instances: Sequence[LabeledInstance],
    config: PipelineConfig | None = None,
) -> CorpusStats:
    """Unique-token counts and per-document token-count ranges for title, description, search term."""
    config = config or PipelineConfig()
    streams = {
        "title": (preprocess(p.title, config) for p in products.values()),
        "description": (preprocess(p.description, config) for p in products.values()),
        "search_term": (preprocess(i.search_term, config) for i in instances),
    }
    unique: dict[str, int] = {}
    ranges: dict[str, tuple[int, int] | None] = {}
    tf_ranges: dict[str, tuple[int, int] | None] = {}
    for name, docs in streams.items():
        counts: dict[str, int] = {}
        lo = hi = None
        for toks in docs:
            n = len(toks)
            lo = n if lo is None else min(lo, n)
            hi = n if hi is None else max(hi, n)
            for t in toks:
                counts[t] = counts.get(t, 0) + 1
        unique[name] = len(counts)
        ranges[name] = None if lo is None else (lo, hi)
        tf_ranges[name] = (min(counts.values()), max(counts.values())) if counts else None
    return CorpusStats(len(products), unique, ranges, tf_ranges)
