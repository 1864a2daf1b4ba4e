"""Inverted-index BM25 search over document titles and abstracts."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .corpus import Document
from .errors import MigrationError, ValidationError

INDEX_FORMAT = "knav-bm25"
INDEX_VERSION = 1

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)
_BOOLEAN_OPERATORS = {"AND", "OR", "NOT"}


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumerics, dropping empty tokens."""
    return _TOKEN.findall(text.lower())


def _query_terms(query: str) -> list[str]:
    """Strip quotes and uppercase Boolean connectives, keep bare terms."""
    stripped = " ".join(w for w in query.split() if w not in _BOOLEAN_OPERATORS)
    return tokenize(stripped)


def indexed_text(doc: Document) -> str:
    body = doc.abstract or doc.snippet or ""
    return f"{doc.title} {body}" if body else doc.title


@dataclass
class Bm25Index:
    """Postings plus the per-document statistics BM25 scoring needs."""

    doc_count: int
    average_doc_length: float
    postings: dict[str, dict[str, int]]
    doc_lengths: dict[str, int]
    k1: float = 1.2
    b: float = 0.75
    version: int = INDEX_VERSION

    def __post_init__(self):
        if self.doc_count > 0 and self.average_doc_length <= 0:
            raise ValidationError("average_doc_length must be positive for a non-empty index")
        for term, entry in self.postings.items():
            for doc_id in entry:
                if doc_id not in self.doc_lengths:
                    raise ValidationError(f"posting for {term!r} references unknown doc {doc_id!r}")

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def to_dict(self) -> dict:
        return {
            "format": INDEX_FORMAT,
            "version": self.version,
            "doc_count": self.doc_count,
            "average_doc_length": self.average_doc_length,
            "k1": self.k1,
            "b": self.b,
            "doc_lengths": self.doc_lengths,
            "postings": self.postings,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        if raw.get("format") != INDEX_FORMAT or raw.get("version") != INDEX_VERSION:
            raise MigrationError(
                f"unsupported index header: {raw.get('format')!r} v{raw.get('version')!r}"
            )
        return cls(
            doc_count=raw["doc_count"],
            average_doc_length=raw["average_doc_length"],
            postings=raw["postings"],
            doc_lengths=raw["doc_lengths"],
            k1=raw["k1"],
            b=raw["b"],
        )


def build_index(docs: Iterable[Document], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    """Index title + abstract (or snippet) per document. No stemming, no stopwords."""
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in docs:
        if doc.id in doc_lengths:
            raise ValidationError(f"duplicate document id {doc.id!r}")
        tokens = tokenize(indexed_text(doc))
        doc_lengths[doc.id] = len(tokens)
        for token in tokens:
            entry = postings.setdefault(token, {})
            entry[doc.id] = entry.get(doc.id, 0) + 1
    if not doc_lengths:
        raise ValidationError("cannot index an empty document list")
    avgdl = sum(doc_lengths.values()) / len(doc_lengths)
    return Bm25Index(
        doc_count=len(doc_lengths),
        average_doc_length=avgdl,
        postings=postings,
        doc_lengths=doc_lengths,
        k1=k1,
        b=b,
    )


def search(index: Bm25Index, query: str, k: int) -> list[tuple[str, float]]:
    """Top-k (doc id, score) by descending BM25 score; ties by ascending doc id.

    Only documents containing at least one query term are scored, so terms
    absent from the corpus contribute nothing.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    terms = _query_terms(query)
    if not terms:
        return []
    scores: dict[str, float] = {}
    for term in terms:
        entry = index.postings.get(term)
        if not entry:
            continue
        idf = index.idf(term)
        for doc_id, tf in entry.items():
            norm = index.k1 * (
                1.0 - index.b + index.b * index.doc_lengths[doc_id] / index.average_doc_length
            )
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (index.k1 + 1.0) / (tf + norm)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
    return ranked[:k]
