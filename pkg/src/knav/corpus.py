"""Topical corpora: documents, loaders, boolean queries, and benchmark builders."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ParseError, RetrievalError, ValidationError

log = logging.getLogger(__name__)

# Cap on documents sampled into one benchmark cluster.
MAX_CLUSTER_SIZE = 50

# Section titles that carry no scientific content; compared case-insensitively
# after stripping any leading "3.1."-style enumeration.
STRUCTURAL_HEADERS = {
    "introduction",
    "background",
    "discussion",
    "conclusion",
    "conclusions",
    "summary",
    "overview",
    "future directions",
    "acknowledgements",
}

JSONL_FIELDS = ("id", "title", "abstract", "snippet", "url", "year")


@dataclass(frozen=True)
class Document:
    """One retrieved paper; the atom every later stage operates on."""

    id: str
    title: str
    abstract: str | None = None
    snippet: str | None = None
    url: str | None = None
    year: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be non-empty")
        if not self.title:
            raise ValidationError(f"document {self.id!r} has an empty title")

    def to_dict(self) -> dict:
        out: dict = {"id": self.id, "title": self.title}
        for name in ("abstract", "snippet", "url", "year"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        return out

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Document":
        year = raw.get("year")
        return cls(
            id=str(raw.get("id", "")),
            title=str(raw.get("title", "")),
            abstract=raw.get("abstract"),
            snippet=raw.get("snippet"),
            url=raw.get("url"),
            year=int(year) if year is not None else None,
        )


@dataclass(frozen=True)
class TopicQuery:
    """A broad topic plus its search-engine form and result budget."""

    topic: str
    query_string: str
    top_k: int = 1000

    def __post_init__(self):
        if not self.query_string:
            raise ValidationError("query_string must be non-empty")
        if not 1 <= self.top_k <= 1000:
            raise ValidationError(f"top_k must be in [1, 1000], got {self.top_k}")


@dataclass
class Corpus:
    """Documents retrieved for one topic, in engine rank order."""

    query: TopicQuery
    documents: list[Document]

    def __post_init__(self):
        if len(self.documents) > self.query.top_k:
            raise ValidationError(
                f"corpus holds {len(self.documents)} docs, exceeds top_k={self.query.top_k}"
            )
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)

    def __len__(self) -> int:
        return len(self.documents)

    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def document_map(self) -> dict[str, Document]:
        return {d.id: d for d in self.documents}

    def save_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for doc in self.documents:
                fh.write(json.dumps(doc.to_dict(), ensure_ascii=False) + "\n")


@dataclass
class LabeledClusterSet:
    """Gold subtopic clusters: disjoint doc-id sets with expert titles."""

    clusters: dict[int, tuple[str, set[str]]]
    documents: dict[str, Document]

    def __post_init__(self):
        claimed: set[str] = set()
        for topic_id, (_, doc_ids) in self.clusters.items():
            if len(doc_ids) > MAX_CLUSTER_SIZE:
                raise ValidationError(f"cluster {topic_id} exceeds {MAX_CLUSTER_SIZE} docs")
            overlap = claimed & doc_ids
            if overlap:
                raise ValidationError(f"clusters overlap on {sorted(overlap)[:3]}")
            claimed |= doc_ids
            missing = [d for d in doc_ids if d not in self.documents]
            if missing:
                raise ValidationError(f"cluster {topic_id} references unknown docs {missing[:3]}")

    def total_docs(self) -> int:
        return sum(len(doc_ids) for _, doc_ids in self.clusters.values())

    def labeling(self) -> tuple[list[str], list[int]]:
        """Flatten to (doc_ids, gold cluster labels), docs sorted for stability."""
        pairs = sorted(
            (doc_id, topic_id)
            for topic_id, (_, doc_ids) in self.clusters.items()
            for doc_id in doc_ids
        )
        return [p[0] for p in pairs], [p[1] for p in pairs]


@dataclass
class ReviewToc:
    """A review article's table of contents with structural sections removed."""

    review_title: str
    derived_query: str
    headers: list[tuple[int, str]] = field(default_factory=list)


def load_corpus_jsonl(path: str | Path, query: TopicQuery) -> Corpus:
    """Load a JSONL corpus, keeping file order and truncating to ``query.top_k``.

    Raises ParseError naming the line for malformed JSON and ValidationError
    for duplicate or invalid documents.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file not found: {path}")
    documents: list[Document] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if len(documents) >= query.top_k:
                break
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if not isinstance(raw, dict):
                raise ParseError("expected one JSON object per line", line=lineno)
            doc = Document.from_dict(raw)
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r} at line {lineno}")
            seen.add(doc.id)
            documents.append(doc)
    return Corpus(query=query, documents=documents)


def load_document_store(path: str | Path) -> dict[str, Document]:
    """Load a JSONL file into an id -> Document map (no size cap)."""
    store: dict[str, Document] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            doc = Document.from_dict(raw)
            if doc.id in store:
                raise ValidationError(f"duplicate document id {doc.id!r} at line {lineno}")
            store[doc.id] = doc
    return store


def build_boolean_query(title: str, connective: str, phrases: list[str]) -> str:
    """Render keyword phrases from ``title`` as a quoted Boolean query."""
    if connective not in ("AND", "OR"):
        raise ValidationError(f"connective must be AND or OR, got {connective!r}")
    if not phrases:
        raise ValidationError("phrase list must be non-empty")
    for phrase in phrases:
        if not phrase.strip():
            raise ValidationError("phrases must be non-empty")
    return f" {connective} ".join(f'"{p}"' for p in phrases)


def fetch_topical_corpus(query: TopicQuery, client) -> Corpus:
    """Pull up to ``query.top_k`` documents from a scholar-search client.

    Pages sequentially, preserves engine rank order, and keeps the first
    occurrence of any duplicated id. An empty result set is a valid corpus.
    """
    documents: list[Document] = []
    seen: set[str] = set()
    page = 1
    page_size = getattr(client, "page_size", 20)
    while len(documents) < query.top_k:
        try:
            batch = client.search(query.query_string, page=page, page_size=page_size)
        except RetrievalError:
            raise
        except Exception as exc:
            raise RetrievalError(f"search failed on page {page}: {exc}", last_page=page) from exc
        if not batch:
            break
        for doc in batch:
            if doc.id in seen:
                continue
            seen.add(doc.id)
            documents.append(doc)
            if len(documents) >= query.top_k:
                break
        page += 1
    return Corpus(query=query, documents=documents)


def parse_qrels(path: str | Path) -> list[tuple[int, str, int]]:
    """Read whitespace-separated "topic iteration doc grade" judgment lines."""
    rows: list[tuple[int, str, int]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields, got {len(parts)}", line=lineno)
            topic_id, _iteration, doc_id, grade = parts
            try:
                rows.append((int(topic_id), doc_id, int(grade)))
            except ValueError as exc:
                raise ParseError(f"non-integer topic or grade: {line!r}", line=lineno) from exc
    return rows


def build_clustrec_benchmark(
    qrels: Iterable[tuple[int, str, int]],
    topics: Mapping[int, str],
    documents: Mapping[str, Document],
    seed: int,
) -> LabeledClusterSet:
    """Build disjoint gold clusters from relevance judgments.

    Only grade-2 judgments count. Topics are processed in ascending id order;
    a document claimed by an earlier topic is removed from later pools before
    sampling, so clusters never overlap. Within each topic we sample without
    replacement up to MAX_CLUSTER_SIZE docs with a seeded generator.
    """
    pools: dict[int, list[str]] = {}
    for topic_id, doc_id, grade in qrels:
        if grade not in (0, 1, 2):
            raise ValidationError(f"grade must be 0, 1, or 2; got {grade} for {doc_id!r}")
        if grade != 2:
            continue
        pools.setdefault(topic_id, []).append(doc_id)

    rng = np.random.default_rng(seed)
    clusters: dict[int, tuple[str, set[str]]] = {}
    claimed: set[str] = set()
    for topic_id in sorted(pools):
        title = topics.get(topic_id, f"topic {topic_id}")
        eligible = sorted(set(pools[topic_id]) - claimed)
        missing = [d for d in eligible if d not in documents]
        if missing:
            raise ValidationError(f"topic {topic_id} references unknown docs {missing[:3]}")
        if not eligible:
            log.warning("topic %s has no eligible documents; cluster omitted", topic_id)
            continue
        size = min(MAX_CLUSTER_SIZE, len(eligible))
        chosen = rng.choice(np.asarray(eligible, dtype=object), size=size, replace=False)
        doc_ids = set(str(d) for d in chosen)
        claimed |= doc_ids
        clusters[topic_id] = (title, doc_ids)
    return LabeledClusterSet(clusters=clusters, documents=dict(documents))


_ENUMERATION = re.compile(r"^[\d.\s]+")


def _clean_header(text: str) -> str:
    return _ENUMERATION.sub("", text).strip().rstrip(".").strip().lower()


def _header_level(raw, text: str) -> int:
    if isinstance(raw, Mapping) and "level" in raw:
        level = int(raw["level"])
    else:
        # Derive from the enumeration: "3.1." nests one level below "3."
        numbering = _ENUMERATION.match(text)
        depth = numbering.group(0).count(".") if numbering else 1
        level = 2 if depth >= 2 else 1
    if level not in (1, 2):
        raise ValidationError(f"header level must be 1 or 2, got {level}")
    return level


def load_scitoc_benchmark(path: str | Path) -> list[ReviewToc]:
    """Load review tables of contents, dropping structural headers.

    Each record needs title, query, and headers; headers may be plain strings
    (level derived from their "3.1."-style numbering) or {level, text} objects.
    """
    records = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(records, list):
        raise ParseError("expected a JSON array of review records")
    tocs: list[ReviewToc] = []
    for idx, record in enumerate(records):
        title = record.get("title")
        if not title:
            raise ValidationError(f"record {idx} is missing its title")
        query = record.get("query")
        if not query:
            raise ValidationError(f"record {idx} ({title!r}) is missing its query")
        headers: list[tuple[int, str]] = []
        for raw in record.get("headers", []):
            text = raw["text"] if isinstance(raw, Mapping) else str(raw)
            if _clean_header(text) in STRUCTURAL_HEADERS:
                continue
            headers.append((_header_level(raw, text), text))
        if not headers:
            log.warning("review %r has no content headers after filtering", title)
        tocs.append(ReviewToc(review_title=title, derived_query=query, headers=headers))
    return tocs
