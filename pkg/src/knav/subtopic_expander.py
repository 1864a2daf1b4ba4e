"""Turn a subtopic cluster into a retrieval query and fetch fresh documents."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .cluster_reader import DEFAULT_ABSTRACT_CAP, SubtopicReport, format_papers_list
from .corpus import Document, TopicQuery, fetch_topical_corpus
from .errors import ExpansionError, ExtractionError, ValidationError
from .llm_gateway import Expect, Gateway, LlmRequest
from .prompts import load_template, render
from .retrieval import Bm25Index, search

log = logging.getLogger(__name__)

# Keyword lists are open-ended in principle; cap them so assembled queries
# stay usable against real search engines.
DEFAULT_MAX_TERMS = 15

_KEYWORDS_TAG = re.compile(r"<keywords>(.*?)</keywords>", re.DOTALL | re.IGNORECASE)
_JUSTIFICATION_TAG = re.compile(r"<justification>(.*?)</justification>", re.DOTALL | re.IGNORECASE)


class QueryForm(str, Enum):
    CONCAT = "concat"
    BOOLEAN_OR = "boolean_or"


@dataclass
class KeywordList:
    """Relevance-ordered terms extracted from a cluster's papers."""

    terms: list[str]
    justification: str = ""

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("keyword list must be non-empty")
        seen: set[str] = set()
        for term in self.terms:
            if not term.strip():
                raise ValidationError("keywords must be non-empty")
            if term.lower() in seen:
                raise ValidationError(f"duplicate keyword {term!r}")
            seen.add(term.lower())


@dataclass
class ExpansionQuery:
    subtopic_title: str
    terms: KeywordList
    rendered: str

    def __post_init__(self):
        if self.subtopic_title not in self.rendered:
            raise ValidationError("rendered query must contain the subtopic title")
        for term in self.terms.terms:
            if term not in self.rendered:
                raise ValidationError(f"rendered query is missing term {term!r}")


@dataclass
class ExpansionHit:
    """One retrieved document with its rank; duplicates of the source cluster
    are annotated, not removed, so rank-based precision stays honest."""

    document: Document
    rank: int
    duplicate: bool = False


def _split_terms(raw: str) -> list[str]:
    parts = re.split(r"[,\n]", raw)
    terms: list[str] = []
    seen: set[str] = set()
    for part in parts:
        term = part.strip().strip("-•*").strip()
        if not term or term.lower() in seen:
            continue
        seen.add(term.lower())
        terms.append(term)
    return terms


def parse_keyword_reply(reply: str, max_terms: int = DEFAULT_MAX_TERMS) -> KeywordList | None:
    """Pull terms out of <keywords> tags; None when the tag is absent/empty."""
    match = _KEYWORDS_TAG.search(reply)
    if not match:
        return None
    terms = _split_terms(match.group(1))[:max_terms]
    if not terms:
        return None
    just = _JUSTIFICATION_TAG.search(reply)
    return KeywordList(terms=terms, justification=just.group(1).strip() if just else "")


def build_expander_prompt(
    topic: str,
    report: SubtopicReport,
    docs: Sequence[Document],
    abstract_cap: int = DEFAULT_ABSTRACT_CAP,
) -> str:
    if not docs:
        raise ValidationError("cannot extract keywords from an empty cluster")
    return render(
        load_template("subtopic_expander"),
        query=topic,
        subtopic_title=report.subtopic_title,
        subtopic_description=report.description,
        papers=format_papers_list(docs, abstract_cap),
    )


def extract_keywords(
    topic: str,
    report: SubtopicReport,
    docs: Sequence[Document],
    gateway: Gateway,
    max_terms: int = DEFAULT_MAX_TERMS,
    abstract_cap: int = DEFAULT_ABSTRACT_CAP,
) -> KeywordList:
    """One gateway call (plus at most one repair) yielding the keyword list."""
    prompt = build_expander_prompt(topic, report, docs, abstract_cap)
    request = LlmRequest(prompt=prompt, expect=Expect.TAGGED_TEXT, model_id=gateway.model_id)
    reply = gateway.complete(request)
    keywords = parse_keyword_reply(reply, max_terms)
    if keywords is None:
        log.warning("no <keywords> tag in reply; issuing one repair request")
        repair = LlmRequest(
            prompt=prompt + "\nInclude your final list of keywords within <keywords> tags.",
            expect=Expect.TAGGED_TEXT,
            model_id=gateway.model_id,
        )
        reply = gateway.complete(repair)
        keywords = parse_keyword_reply(reply, max_terms)
        if keywords is None:
            raise ExtractionError("reply has no usable <keywords> tag after repair", raw=reply)
    return keywords


def assemble_expansion_query(
    report: SubtopicReport, keywords: KeywordList, form: QueryForm = QueryForm.CONCAT
) -> ExpansionQuery:
    """Render "title + term1, term2, ..." or the quoted OR-Boolean equivalent."""
    form = QueryForm(form)
    title = report.subtopic_title
    if form is QueryForm.CONCAT:
        rendered = f"{title} + {', '.join(keywords.terms)}"
    else:
        rendered = " OR ".join(f'"{part}"' for part in [title, *keywords.terms])
    return ExpansionQuery(subtopic_title=title, terms=keywords, rendered=rendered)


class Bm25Retriever:
    """Adapter: BM25 index plus a doc store satisfying the retriever contract."""

    def __init__(self, index: Bm25Index, documents: Mapping[str, Document]):
        self.index = index
        self.documents = dict(documents)

    def retrieve(self, query_text: str, k: int) -> list[Document]:
        return [self.documents[doc_id] for doc_id, _ in search(self.index, query_text, k)]


class ScholarRetriever:
    """Adapter: paged scholar-search client behind the retriever contract."""

    def __init__(self, client):
        self.client = client

    def retrieve(self, query_text: str, k: int) -> list[Document]:
        query = TopicQuery(topic=query_text, query_string=query_text, top_k=min(k, 1000))
        return fetch_topical_corpus(query, self.client).documents


def expand_subtopic(
    query: ExpansionQuery,
    retriever,
    k: int,
    cluster_doc_ids: Sequence[str] | set[str] = (),
) -> list[ExpansionHit]:
    """Top-k retrieval for an expansion query, retriever order preserved."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    known = set(cluster_doc_ids)
    try:
        docs = retriever.retrieve(query.rendered, k)
    except Exception as exc:
        raise ExpansionError(f"retriever failed for {query.rendered!r}: {exc}") from exc
    return [
        ExpansionHit(document=doc, rank=rank, duplicate=doc.id in known)
        for rank, doc in enumerate(docs[:k], start=1)
    ]
