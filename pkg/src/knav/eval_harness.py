"""Benchmark evaluation runs behind `knav eval ...`.

Each run computes its metrics, writes the JSON/CSV/text report bundle with
published reference values alongside, and renders figures next to them.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .clustering import (
    EmSettings,
    assign_documents,
    random_assignment,
    reduce_dimensions,
    sweep_num_clusters,
)
from .corpus import load_document_store, load_scitoc_benchmark, parse_qrels
from .corpus import build_clustrec_benchmark
from .embedding import HashingEmbeddingClient, HttpEmbeddingClient, embed_texts, embedding_text
from .errors import ValidationError
from .evaluation import (
    adjusted_rand_index,
    navigation_metrics,
    normalized_mutual_info,
    precision_recall_at_k,
    soft_heading_recall,
)
from .reporting import REFERENCE_RESULTS, bar_figure, line_figure, write_report
from .retrieval import Bm25Index, search

log = logging.getLogger(__name__)


def make_embed_client(provider: str, model_id: str | None = None):
    if provider == "http":
        return HttpEmbeddingClient(model_id=model_id)
    return HashingEmbeddingClient(model_id=model_id or "hash-v1")


def run_clustrec_eval(
    qrels_path: str,
    topics_path: str,
    docs_path: str,
    out_dir: str,
    seed: int = 0,
    p: float = 80.0,
    embed_provider: str = "hash",
    settings: EmSettings | None = None,
) -> dict:
    """Cluster a gold benchmark's documents and score agreement + navigation cost."""
    settings = settings or EmSettings()
    qrels = parse_qrels(qrels_path)
    topics = {int(k): v for k, v in json.loads(Path(topics_path).read_text(encoding="utf-8")).items()}
    documents = load_document_store(docs_path)
    gold = build_clustrec_benchmark(qrels, topics, documents, seed)

    doc_ids, gold_labels = gold.labeling()
    n = len(doc_ids)
    client = make_embed_client(embed_provider)
    texts = [embedding_text(gold.documents[d]) for d in doc_ids]
    matrix = embed_texts(texts, doc_ids, client)

    target_dim = max(1, min(settings.target_dim, n - 1, matrix.dim))
    reduced = reduce_dimensions(matrix, target_dim)
    k_min = max(2, settings.k_min)
    k_max = min(max(k_min, settings.resolved_k_max(n)), n - 1)
    sweep = sweep_num_clusters(reduced, (k_min, k_max), seed, settings)
    if not sweep:
        raise ValidationError("model selection failed: every fit was degenerate")
    best_k, best_score, model = max(sweep, key=lambda item: (item[1], -item[0]))
    assignment = assign_documents(model, reduced, settings.membership_threshold)

    gold_map = {topic_id: set(ids) for topic_id, (_, ids) in gold.clusters.items()}

    def metric_row(method: str, labels: Sequence[int]) -> dict:
        by_doc = {doc_ids[i]: int(labels[i]) for i in range(n)}
        nav = navigation_metrics(by_doc, gold_map, corpus_size=n, p=p)
        return {
            "method": method,
            "ari": adjusted_rand_index(gold_labels, list(labels)),
            "nmi": normalized_mutual_info(gold_labels, list(labels)),
            f"r_c@{p:g}": nav.mean_r_c,
            f"r_v@{p:g}": nav.mean_r_v,
        }

    rows = [
        metric_row(f"pipeline ({client.model_id}, k={best_k})", assignment.hard_labels),
        metric_row("random assignment", random_assignment(n, len(gold.clusters), seed).hard_labels),
    ]
    reference = [dict(REFERENCE_RESULTS["clustrec"]), dict(REFERENCE_RESULTS["clustrec_random"])]
    for ref in reference:
        ref[f"r_c@{p:g}"] = ref.pop("r_c@80")
        ref[f"r_v@{p:g}"] = ref.pop("r_v@80")
    columns = ["method", "ari", "nmi", f"r_c@{p:g}", f"r_v@{p:g}"]
    meta = {
        "benchmark_docs": n,
        "gold_clusters": len(gold.clusters),
        "selected_k": best_k,
        "silhouette": best_score,
        "seed": seed,
    }
    paths = write_report(out_dir, "clustrec", columns, rows + reference, meta=meta)
    line_figure(
        Path(out_dir) / "clustrec_silhouette_by_k.png",
        [k for k, _, _ in sweep],
        {"silhouette": [s for _, s, _ in sweep]},
        title="Model selection sweep",
        xlabel="clusters (k)",
        ylabel="silhouette",
    )
    bar_figure(
        Path(out_dir) / "clustrec_metrics.png",
        [r["method"] for r in rows + reference],
        [r["ari"] for r in rows + reference],
        title="Clustering agreement with gold subtopics",
        ylabel="adjusted rand index",
    )
    return {"rows": rows, "reference": reference, "meta": meta, "paths": paths}


def run_queries_eval(
    index_path: str,
    queries_path: str,
    qrels_path: str,
    out_dir: str,
    ks: Sequence[int] = (20, 70, 100, 200),
) -> dict:
    """Mean precision/recall@K of query files against a BM25 index and qrels.

    The queries file is JSONL rows {"topic_id", "query", "method"?}; rows are
    grouped by method so several query-generation strategies can share a file.
    """
    index = Bm25Index.load(index_path)
    relevant: dict[int, set[str]] = {}
    for topic_id, doc_id, grade in parse_qrels(qrels_path):
        if grade >= 1:
            relevant.setdefault(topic_id, set()).add(doc_id)

    per_method: dict[str, list[dict[int, tuple[float, float]]]] = {}
    with open(queries_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            topic_id = int(row["topic_id"])
            if topic_id not in relevant:
                log.warning("topic %s has no relevant docs in qrels; skipped", topic_id)
                continue
            ranked = [doc_id for doc_id, _ in search(index, row["query"], max(ks))]
            scores = precision_recall_at_k(ranked, relevant[topic_id], list(ks))
            per_method.setdefault(row.get("method", "queries"), []).append(scores)

    if not per_method:
        raise ValidationError("no evaluable queries found")

    rows = []
    for method, results in sorted(per_method.items()):
        row: dict = {"method": method, "topics": len(results)}
        for k in ks:
            row[f"p@{k}"] = float(np.mean([r[k][0] for r in results]))
            row[f"r@{k}"] = float(np.mean([r[k][1] for r in results]))
        rows.append(row)
    reference = []
    for name, values in REFERENCE_RESULTS["queries"].items():
        ref = {"method": f"reference ({name})", "topics": None}
        for k in ks:
            ref[f"p@{k}"] = values.get(k)
        reference.append(ref)
    columns = ["method", "topics"] + [f"p@{k}" for k in ks] + [f"r@{k}" for k in ks]
    paths = write_report(out_dir, "queries", columns, rows + reference)
    series = {row["method"]: [row[f"p@{k}"] for k in ks] for row in rows}
    for ref in reference:
        if all(ref.get(f"p@{k}") is not None for k in ks):
            series[ref["method"]] = [ref[f"p@{k}"] for k in ks]
    line_figure(
        Path(out_dir) / "queries_precision_at_k.png",
        list(ks),
        series,
        title="Retrieval precision by query method",
        xlabel="K",
        ylabel="precision@K",
    )
    return {"rows": rows, "reference": reference, "paths": paths}


def run_scitoc_eval(
    scitoc_path: str,
    titles_path: str,
    out_dir: str,
    embed_provider: str = "hash",
) -> dict:
    """Soft heading recall of generated subtopic titles against review TOCs.

    ``titles_path`` is a JSON object mapping each review title to the list of
    generated subtopic titles for that review.
    """
    tocs = load_scitoc_benchmark(scitoc_path)
    generated: Mapping[str, list[str]] = json.loads(Path(titles_path).read_text(encoding="utf-8"))
    client = make_embed_client(embed_provider)

    rows = []
    for toc in tocs:
        titles = generated.get(toc.review_title)
        if titles is None:
            log.warning("no generated titles for review %r; skipped", toc.review_title)
            continue
        headers = [text for _, text in toc.headers]
        if not headers:
            continue
        shr = soft_heading_recall(headers, titles, client)
        rows.append(
            {
                "review": toc.review_title,
                "gold_headers": len(headers),
                "generated": len(titles),
                "soft_recall": shr,
            }
        )
    if not rows:
        raise ValidationError("no reviews could be evaluated")
    mean_row = {
        "review": "MEAN",
        "gold_headers": None,
        "generated": None,
        "soft_recall": float(np.mean([r["soft_recall"] for r in rows])),
    }
    columns = ["review", "gold_headers", "generated", "soft_recall"]
    meta = {
        "embedder": client.model_id,
        "reference_soft_recall": REFERENCE_RESULTS["scitoc"],
    }
    paths = write_report(out_dir, "scitoc", columns, rows + [mean_row], meta=meta)
    bar_figure(
        Path(out_dir) / "scitoc_soft_recall.png",
        [r["review"][:32] for r in rows],
        [r["soft_recall"] for r in rows],
        title="Heading coverage per review",
        ylabel="soft heading recall",
    )
    return {"rows": rows + [mean_row], "meta": meta, "paths": paths}
