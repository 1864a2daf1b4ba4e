"""Quantitative measures: clustering agreement, navigation cost, retrieval
precision/recall, heading coverage, and an LLM relevance judge."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import Document
from .embedding import cosine_similarity
from .errors import DomainError, JudgeOutputError, ValidationError
from .llm_gateway import Expect, Gateway, LlmRequest
from .prompts import load_template

log = logging.getLogger(__name__)

Labeling = Sequence[int]


@dataclass
class NavigationMetrics:
    """Cost of covering one topic's relevant docs by best-first cluster reading."""

    topic_id: int
    r_c: int
    r_v: float
    p: float

    def __post_init__(self):
        if self.r_c < 1:
            raise ValidationError("r_c must be >= 1 when any relevant doc exists")
        if not 0.0 <= self.r_v <= 1.0:
            raise ValidationError("r_v must lie in [0, 1]")


@dataclass
class NavigationReport:
    per_topic: dict[int, NavigationMetrics]
    mean_r_c: float
    mean_r_v: float
    p: float
    skipped_topics: list[int]


@dataclass(frozen=True)
class RelevanceGrade:
    """0-2 focus grade; binary relevance is derived, never stored."""

    grade: int

    def __post_init__(self):
        if self.grade not in (0, 1, 2):
            raise ValidationError(f"grade must be 0, 1, or 2, got {self.grade}")

    @property
    def relevant(self) -> bool:
        return self.grade in (1, 2)


def _contingency(a: Labeling, b: Labeling) -> np.ndarray:
    if len(a) != len(b):
        raise ValidationError(f"labelings differ in length: {len(a)} vs {len(b)}")
    a_arr = np.asarray(a)
    b_arr = np.asarray(b)
    _, a_idx = np.unique(a_arr, return_inverse=True)
    _, b_idx = np.unique(b_arr, return_inverse=True)
    table = np.zeros((a_idx.max() + 1, b_idx.max() + 1), dtype=np.int64)
    np.add.at(table, (a_idx, b_idx), 1)
    return table


def _comb2(x: np.ndarray) -> np.ndarray:
    return x * (x - 1) / 2.0


def adjusted_rand_index(a: Labeling, b: Labeling) -> float:
    """Chance-adjusted pair-counting agreement between two labelings.

    Degenerate cases where the chance correction is undefined (Max equals
    Expected) return 0 by convention.
    """
    if len(a) < 2:
        raise ValidationError("need at least 2 items")
    table = _contingency(a, b)
    n = table.sum()
    index = _comb2(table).sum()
    sum_a = _comb2(table.sum(axis=1)).sum()
    sum_b = _comb2(table.sum(axis=0)).sum()
    expected = sum_a * sum_b / _comb2(np.asarray(n))
    maximum = 0.5 * (sum_a + sum_b)
    if math.isclose(maximum, expected, abs_tol=1e-15):
        return 0.0
    return float((index - expected) / (maximum - expected))


def _partitions_identical(a: Labeling, b: Labeling) -> bool:
    groups_a = {}
    groups_b = {}
    for i, (la, lb) in enumerate(zip(a, b)):
        groups_a.setdefault(la, set()).add(i)
        groups_b.setdefault(lb, set()).add(i)
    return set(map(frozenset, groups_a.values())) == set(map(frozenset, groups_b.values()))


def normalized_mutual_info(a: Labeling, b: Labeling) -> float:
    """I(a;b) / sqrt(H(a) H(b)) with natural-log entropies.

    If either labeling has zero entropy the ratio is undefined; return 1 for
    identical partitions and 0 otherwise.
    """
    table = _contingency(a, b)
    n = int(table.sum())
    counts_a = table.sum(axis=1)
    counts_b = table.sum(axis=0)
    if counts_a.max() == n or counts_b.max() == n:
        # A constant labeling has zero entropy; the ratio is undefined.
        return 1.0 if _partitions_identical(a, b) else 0.0

    p_a = counts_a / n
    p_b = counts_b / n
    h_a = -float(np.sum(p_a * np.log(p_a, where=p_a > 0, out=np.zeros_like(p_a))))
    h_b = -float(np.sum(p_b * np.log(p_b, where=p_b > 0, out=np.zeros_like(p_b))))

    p_ab = table / n
    nz = p_ab > 0
    outer = np.outer(p_a, p_b)
    mutual = float(np.sum(p_ab[nz] * np.log(p_ab[nz] / outer[nz])))
    value = mutual / math.sqrt(h_a * h_b)
    return float(min(1.0, max(0.0, value)))


def navigation_metrics(
    assignment: Mapping[str, int],
    gold: Mapping[int, set[str]],
    corpus_size: int,
    p: float,
) -> NavigationReport:
    """Clusters needed (r_c) and corpus fraction examined (r_v) to reach p%
    of each topic's relevant documents.

    Clusters are visited by descending relevant-document count, ties broken
    by smaller cluster size then lower cluster id; because clusters partition
    the corpus this greedy order needs the provably minimal number of clusters.
    Topics with no relevant document present are skipped with a warning.
    """
    if not 0.0 < p <= 100.0:
        raise ValidationError(f"p must be in (0, 100], got {p}")
    if corpus_size < 1:
        raise ValidationError("corpus_size must be >= 1")

    cluster_sizes: dict[int, int] = {}
    for cluster_id in assignment.values():
        cluster_sizes[cluster_id] = cluster_sizes.get(cluster_id, 0) + 1

    per_topic: dict[int, NavigationMetrics] = {}
    skipped: list[int] = []
    for topic_id in sorted(gold):
        relevant = {d for d in gold[topic_id] if d in assignment}
        if not relevant:
            log.warning("topic %s has no relevant docs in the assignment; skipped", topic_id)
            skipped.append(topic_id)
            continue
        needed = math.ceil(p / 100.0 * len(relevant))
        counts: dict[int, int] = {}
        for doc_id in relevant:
            cluster_id = assignment[doc_id]
            counts[cluster_id] = counts.get(cluster_id, 0) + 1
        order = sorted(
            counts, key=lambda c: (-counts[c], cluster_sizes[c], c)
        )
        covered = 0
        examined = 0
        taken = 0
        for cluster_id in order:
            covered += counts[cluster_id]
            examined += cluster_sizes[cluster_id]
            taken += 1
            if covered >= needed:
                break
        per_topic[topic_id] = NavigationMetrics(
            topic_id=topic_id, r_c=taken, r_v=examined / corpus_size, p=p
        )

    if per_topic:
        mean_r_c = float(np.mean([m.r_c for m in per_topic.values()]))
        mean_r_v = float(np.mean([m.r_v for m in per_topic.values()]))
    else:
        mean_r_c = math.nan
        mean_r_v = math.nan
    return NavigationReport(
        per_topic=per_topic, mean_r_c=mean_r_c, mean_r_v=mean_r_v, p=p, skipped_topics=skipped
    )


def precision_recall_at_k(
    ranked: Sequence[str],
    relevant: set[str],
    ks: Sequence[int],
) -> dict[int, tuple[float, float]]:
    """precision@k = hits/k (k in the denominator even past list end);
    recall@k = hits/|relevant|."""
    if not relevant:
        raise DomainError("recall is undefined for an empty relevant set")
    if any(k < 1 for k in ks):
        raise ValidationError("every k must be positive")
    out: dict[int, tuple[float, float]] = {}
    for k in ks:
        hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
        out[k] = (hits / k, hits / len(relevant))
    return out


def soft_heading_recall(
    gold_headers: Sequence[str],
    generated_titles: Sequence[str],
    embed_client,
) -> float:
    """Average over gold headings of the best cosine match among generated titles."""
    if not gold_headers:
        raise ValidationError("gold headers must be non-empty")
    if not generated_titles:
        return 0.0
    texts = list(gold_headers) + list(generated_titles)
    vectors = embed_client.embed(texts)
    gold_vecs = vectors[: len(gold_headers)]
    gen_vecs = vectors[len(gold_headers):]
    total = 0.0
    for gv in gold_vecs:
        total += max(cosine_similarity(gv, hv) for hv in gen_vecs)
    return total / len(gold_headers)


_INT_REPLY = re.compile(r"[0-9]+")


def llm_relevance_judge(doc: Document, subtopic_title: str, gateway: Gateway) -> RelevanceGrade:
    """Grade how focused a document is on a subtopic: 0 marginal, 2 focused."""
    template = load_template("relevance_judge")
    prompt = (
        template.replace("{subtopic_title}", subtopic_title)
        .replace("{title}", doc.title)
        .replace("{abstract}", doc.abstract or doc.snippet or "")
    )
    request = LlmRequest(prompt=prompt, expect=Expect.TAGGED_TEXT, model_id=gateway.model_id)
    reply = gateway.complete(request)
    grade = _parse_grade(reply)
    if grade is None:
        repair = LlmRequest(
            prompt=prompt + "\nReply with a single integer: 0, 1, or 2.",
            expect=Expect.TAGGED_TEXT,
            model_id=gateway.model_id,
        )
        reply = gateway.complete(repair)
        grade = _parse_grade(reply)
        if grade is None:
            raise JudgeOutputError("judge reply is not a 0-2 integer", raw=reply)
    return RelevanceGrade(grade=grade)


def _parse_grade(reply: str) -> int | None:
    match = _INT_REPLY.search(reply)
    if not match:
        return None
    value = int(match.group(0))
    return value if value in (0, 1, 2) else None
