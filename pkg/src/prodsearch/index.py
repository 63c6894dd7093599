"""Per-field term statistics (tf, ctf, df, lengths) and their on-disk cache."""
from __future__ import annotations

import io
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import FIELDS, ProductRecord
from .errors import DataError, EmptyCorpus
from .text import PipelineConfig, preprocess


@dataclass
class FieldIndex:
    field: str
    postings: dict[str, dict[int, int]] = field(default_factory=dict)
    doc_length: dict[int, int] = field(default_factory=dict)
    ctf: dict[str, int] = field(default_factory=dict)
    df: dict[str, int] = field(default_factory=dict)

    def tf(self, term: str, product_uid: int) -> int:
        p = self.postings.get(term)
        return 0 if p is None else p.get(product_uid, 0)

    @property
    def num_documents(self) -> int:
        return len(self.doc_length)


@dataclass(frozen=True)
class CollectionStats:
    collection_length: int
    num_documents: int
    avg_doc_length: float


def tf(index: FieldIndex, term: str, product_uid: int) -> int:
    return index.tf(term, product_uid)


def index_from_tokens(field_name: str, docs: Mapping[int, Sequence[str]]) -> tuple[FieldIndex, CollectionStats]:
    if not docs:
        raise EmptyCorpus(f"no documents for field {field_name!r}")
    idx = FieldIndex(field_name)
    for uid in sorted(docs):
        toks = docs[uid]
        idx.doc_length[uid] = len(toks)
        for term, count in Counter(toks).items():
            idx.postings.setdefault(term, {})[uid] = count
            idx.ctf[term] = idx.ctf.get(term, 0) + count
    idx.df = {t: len(p) for t, p in idx.postings.items()}
    total = sum(idx.doc_length.values())
    n = len(idx.doc_length)
    return idx, CollectionStats(total, n, total / n)


def build_index(
    products: Mapping[int, ProductRecord],
    field_name: str,
    config: PipelineConfig | None = None,
) -> tuple[FieldIndex, CollectionStats]:
    """One index per field; the attributes field indexes ``name value`` pairs in source order."""
    if field_name not in FIELDS:
        raise ValueError(f"unknown field {field_name!r}")
    config = config or PipelineConfig()
    docs = {uid: preprocess(p.field_text(field_name), config) for uid, p in products.items()}
    return index_from_tokens(field_name, docs)


# ---------------------------------------------------------------------------
# cache file
#
# layout (little endian):
#   b"PSIDX\0"  magic
#   u32         format version
#   sections, each:  u16 name length, name (utf-8), u64 payload length, payload
# sections, in order:
#   meta      utf-8 "field\nconfig fingerprint"
#   terms     utf-8 terms joined by "\n", sorted
#   docs      int64[num_docs] product uids, sorted
#   lengths   int64[num_docs] doc lengths aligned with docs
#   indptr    int64[num_terms + 1] CSR offsets into the next two arrays
#   postdoc   int64[nnz] row into docs
#   posttf    int64[nnz] term frequency

MAGIC = b"PSIDX\0"
VERSION = 1
_SECTIONS = ("meta", "terms", "docs", "lengths", "indptr", "postdoc", "posttf")


def _write_section(fh, name: str, payload: bytes) -> None:
    raw = name.encode("utf-8")
    fh.write(struct.pack("<H", len(raw)))
    fh.write(raw)
    fh.write(struct.pack("<Q", len(payload)))
    fh.write(payload)


def save_index(path: str | Path, index: FieldIndex, config_fingerprint: str) -> None:
    terms = sorted(index.postings)
    docs = np.array(sorted(index.doc_length), dtype="<i8")
    row = {int(u): i for i, u in enumerate(docs)}
    lengths = np.array([index.doc_length[int(u)] for u in docs], dtype="<i8")
    indptr = [0]
    postdoc: list[int] = []
    posttf: list[int] = []
    for t in terms:
        for uid, c in sorted(index.postings[t].items()):
            postdoc.append(row[uid])
            posttf.append(c)
        indptr.append(len(postdoc))
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    payloads = {
        "meta": f"{index.field}\n{config_fingerprint}".encode("utf-8"),
        "terms": "\n".join(terms).encode("utf-8"),
        "docs": docs.tobytes(),
        "lengths": lengths.tobytes(),
        "indptr": np.asarray(indptr, dtype="<i8").tobytes(),
        "postdoc": np.asarray(postdoc, dtype="<i8").tobytes(),
        "posttf": np.asarray(posttf, dtype="<i8").tobytes(),
    }
    for name in _SECTIONS:
        _write_section(buf, name, payloads[name])
    Path(path).write_bytes(buf.getvalue())


def load_index(path: str | Path, config_fingerprint: str | None = None) -> tuple[FieldIndex, CollectionStats] | None:
    """Read a cached index. Returns None if the cache was built under another config."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise DataError(f"{path}: not an index cache file")
    off = len(MAGIC)
    (version,) = struct.unpack_from("<I", data, off)
    off += 4
    if version != VERSION:
        return None
    sections: dict[str, bytes] = {}
    while off < len(data):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off : off + nlen].decode("utf-8")
        off += nlen
        (plen,) = struct.unpack_from("<Q", data, off)
        off += 8
        sections[name] = data[off : off + plen]
        off += plen
    field_name, fingerprint = sections["meta"].decode("utf-8").split("\n")
    if config_fingerprint is not None and fingerprint != config_fingerprint:
        return None
    terms = sections["terms"].decode("utf-8").split("\n") if sections["terms"] else []
    docs = np.frombuffer(sections["docs"], dtype="<i8")
    lengths = np.frombuffer(sections["lengths"], dtype="<i8")
    indptr = np.frombuffer(sections["indptr"], dtype="<i8")
    postdoc = np.frombuffer(sections["postdoc"], dtype="<i8")
    posttf = np.frombuffer(sections["posttf"], dtype="<i8")
    idx = FieldIndex(field_name)
    idx.doc_length = {int(u): int(n) for u, n in zip(docs, lengths)}
    uids = docs.tolist()
    for i, t in enumerate(terms):
        lo, hi = int(indptr[i]), int(indptr[i + 1])
        idx.postings[t] = {uids[r]: c for r, c in zip(postdoc[lo:hi].tolist(), posttf[lo:hi].tolist())}
        idx.ctf[t] = int(posttf[lo:hi].sum())
        idx.df[t] = hi - lo
    total = int(lengths.sum())
    n = len(docs)
    return idx, CollectionStats(total, n, total / n if n else 0.0)
