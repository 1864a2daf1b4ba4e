"""Name, describe, score, and filter one subtopic cluster per LLM call."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .corpus import Document
from .errors import ReaderOutputError, ValidationError
from .llm_gateway import Expect, Gateway, LlmRequest
from .prompts import load_template, render

log = logging.getLogger(__name__)

# Abstracts are capped per document so large clusters still fit one prompt;
# titles are never truncated.
DEFAULT_ABSTRACT_CAP = 1200
DEFAULT_PARALLELISM = 4


class Verdict(str, Enum):
    RELATED = "RELATED"
    NOT_RELATED = "NOT_RELATED"


@dataclass
class SubtopicReport:
    """The reader's verdict on one cluster: description, title, score, filter flag."""

    cluster_id: int
    description: str
    subtopic_title: str
    relatedness: int
    is_related: Verdict
    doc_ids: set[str]

    def __post_init__(self):
        if not self.description.strip():
            raise ValidationError("description must be non-empty")
        if not self.subtopic_title.strip():
            raise ValidationError("subtopic title must be non-empty")
        if not 1 <= self.relatedness <= 5:
            raise ValidationError(f"relatedness must be in [1, 5], got {self.relatedness}")
        self.is_related = Verdict(self.is_related)
        self.doc_ids = set(self.doc_ids)

    @property
    def retained(self) -> bool:
        return self.is_related is Verdict.RELATED

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "description": self.description,
            "subtopic_title": self.subtopic_title,
            "relatedness": self.relatedness,
            "is_related": self.is_related.value,
            "doc_ids": sorted(self.doc_ids),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "SubtopicReport":
        return cls(
            cluster_id=int(raw["cluster_id"]),
            description=raw["description"],
            subtopic_title=raw["subtopic_title"],
            relatedness=int(raw["relatedness"]),
            is_related=Verdict(raw["is_related"]),
            doc_ids=set(raw["doc_ids"]),
        )


def format_papers_list(docs: Sequence[Document], abstract_cap: int = DEFAULT_ABSTRACT_CAP) -> str:
    """Numbered Title/Abstract blocks; the abstract slot falls back to the snippet."""
    blocks = []
    for i, doc in enumerate(docs, start=1):
        body = doc.abstract if doc.abstract else (doc.snippet or "")
        blocks.append(f"{i}. Title: {doc.title}\nAbstract: {body[:abstract_cap]}")
    return "\n\n".join(blocks)


def build_reader_prompt(
    topic: str, docs: Sequence[Document], abstract_cap: int = DEFAULT_ABSTRACT_CAP
) -> str:
    if not docs:
        raise ValidationError("cannot build a reader prompt for an empty cluster")
    return render(
        load_template("cluster_reader"),
        query=topic,
        papers_list=format_papers_list(docs, abstract_cap),
    )


def _field(data: Mapping, name: str):
    """Case- and separator-insensitive lookup of a reply field."""
    wanted = name.lower().replace("_", " ")
    for key, value in data.items():
        if str(key).lower().replace("_", " ").strip() == wanted:
            return value
    return None


def read_cluster(
    topic: str,
    cluster_id: int,
    docs: Sequence[Document],
    gateway: Gateway,
    abstract_cap: int = DEFAULT_ABSTRACT_CAP,
) -> SubtopicReport:
    """One gateway call producing the cluster's SubtopicReport.

    Out-of-range relatedness is clamped into [1, 5] with a warning; the
    RELATED / NOT RELATED verdict string is normalized for case and spacing.
    """
    prompt = build_reader_prompt(topic, docs, abstract_cap)
    request = LlmRequest(prompt=prompt, expect=Expect.JSON, model_id=gateway.model_id)
    data = gateway.complete_json(request)
    if not isinstance(data, Mapping):
        raise ReaderOutputError("reader reply is not a JSON object", raw=json.dumps(data))

    raw_text = json.dumps(data, ensure_ascii=False)
    description = _field(data, "description")
    title = _field(data, "subtopic")
    relatedness = _field(data, "relatedness")
    verdict = _field(data, "is related")
    missing = [
        name
        for name, value in (
            ("Description", description),
            ("Subtopic", title),
            ("Relatedness", relatedness),
            ("Is Related", verdict),
        )
        if value is None
    ]
    if missing:
        raise ReaderOutputError(f"reader reply is missing fields {missing}", raw=raw_text)

    try:
        score = int(float(relatedness))
    except (TypeError, ValueError):
        raise ReaderOutputError(f"relatedness {relatedness!r} is not a number", raw=raw_text)
    if not 1 <= score <= 5:
        clamped = min(5, max(1, score))
        log.warning("cluster %d relatedness %d out of range; clamped to %d", cluster_id, score, clamped)
        score = clamped

    normalized = str(verdict).upper().strip().strip(".").replace(" ", "_")
    if normalized not in (Verdict.RELATED.value, Verdict.NOT_RELATED.value):
        raise ReaderOutputError(f"unrecognized verdict {verdict!r}", raw=raw_text)

    return SubtopicReport(
        cluster_id=cluster_id,
        description=str(description).strip(),
        subtopic_title=str(title).strip(),
        relatedness=score,
        is_related=Verdict(normalized),
        doc_ids={doc.id for doc in docs},
    )


def read_clusters(
    topic: str,
    clusters: Mapping[int, Sequence[Document]],
    gateway: Gateway,
    abstract_cap: int = DEFAULT_ABSTRACT_CAP,
    parallelism: int = DEFAULT_PARALLELISM,
) -> dict[int, SubtopicReport]:
    """Read every cluster with bounded parallelism; results keyed by cluster id."""
    ids = sorted(clusters)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        futures = {
            cid: pool.submit(read_cluster, topic, cid, clusters[cid], gateway, abstract_cap)
            for cid in ids
        }
        return {cid: fut.result() for cid, fut in futures.items()}


def partition_reports(
    reports: Sequence[SubtopicReport],
) -> tuple[list[SubtopicReport], list[SubtopicReport]]:
    """Split into (retained, filtered) by verdict, preserving input order."""
    retained = [r for r in reports if r.retained]
    filtered = [r for r in reports if not r.retained]
    return retained, filtered
