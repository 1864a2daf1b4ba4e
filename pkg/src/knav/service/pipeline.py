"""End-to-end orchestration: corpus in, persisted run artifact out."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass

from ..cluster_reader import partition_reports, read_clusters
from ..clustering import assign_documents, reduce_dimensions, sweep_num_clusters
from ..corpus import Corpus, TopicQuery, fetch_topical_corpus, load_corpus_jsonl
from ..embedding import (
    EmbeddingCache,
    HashingEmbeddingClient,
    HttpEmbeddingClient,
    embed_documents,
)
from ..errors import PipelineStageError, PreconditionError, SelectionError, ValidationError
from ..llm_gateway import Gateway, HttpChatProvider, Mode, Transcript, default_model_id
from ..retrieval import build_index
from ..scholar import FixtureScholarClient, HttpScholarClient
from ..subtopic_expander import (
    Bm25Retriever,
    ScholarRetriever,
    assemble_expansion_query,
    expand_subtopic,
    extract_keywords,
)
from ..thematic_organizer import organize
from .artifact import ClusterRecord, RunArtifact, RunConfig, RunStatus, RunStore

log = logging.getLogger(__name__)


@dataclass
class Runtime:
    """Live collaborators resolved from a RunConfig plus the environment."""

    embed_client: object
    gateway: Gateway
    embed_cache: EmbeddingCache | None = None
    scholar_client: object | None = None


def build_runtime(config: RunConfig) -> Runtime:
    if config.embed_provider == "http":
        embed_client = HttpEmbeddingClient(model_id=config.embed_model)
    else:
        embed_client = HashingEmbeddingClient(model_id=config.embed_model or "hash-v1")

    cache_dir = config.cache_dir or os.environ.get("KNAV_CACHE_DIR")
    cache = EmbeddingCache(cache_dir) if cache_dir else None

    transcript = Transcript(config.transcript_path) if config.transcript_path else None
    mode = config.llm_mode
    provider = None if mode is Mode.REPLAY else HttpChatProvider()
    gateway = Gateway(
        mode=mode,
        provider=provider,
        transcript=transcript,
        model_id=config.llm_model or default_model_id(),
    )

    scholar = None
    if config.scholar_fixture_dir:
        scholar = FixtureScholarClient(config.scholar_fixture_dir)
    elif os.environ.get("KNAV_SCHOLAR_BASE_URL"):
        scholar = HttpScholarClient()
    return Runtime(embed_client=embed_client, gateway=gateway, embed_cache=cache, scholar_client=scholar)


def _load_corpus(config: RunConfig, runtime: Runtime) -> Corpus:
    query = TopicQuery(
        topic=config.topic,
        query_string=config.query_string or config.topic,
        top_k=config.top_k,
    )
    if config.corpus_path:
        return load_corpus_jsonl(config.corpus_path, query)
    if runtime.scholar_client is None:
        raise ValidationError("live corpus fetch requested but no scholar client is configured")
    return fetch_topical_corpus(query, runtime.scholar_client)


def run_pipeline(
    config: RunConfig,
    runtime: Runtime | None = None,
    store: RunStore | None = None,
    run_id: str | None = None,
) -> RunArtifact:
    """Execute corpus -> embed -> reduce -> select/fit -> assign -> read ->
    partition -> organize, persisting progress when a store is given.

    Any stage failure marks the artifact FAILED with the stage name, persists
    the partial artifact, and re-raises as PipelineStageError.
    """
    config.validate()
    runtime = runtime or build_runtime(config)
    artifact = RunArtifact.new(config, run_id)

    def checkpoint() -> None:
        if store is not None:
            store.save(artifact)

    stage = "init"

    def enter(name: str) -> None:
        nonlocal stage
        stage = name
        artifact.stage = name
        checkpoint()

    checkpoint()
    artifact.status = RunStatus.RUNNING
    checkpoint()

    try:
        enter("corpus")
        corpus = _load_corpus(config, runtime)
        artifact.corpus_summary = {
            "doc_count": len(corpus),
            "topic": config.topic,
            "query_string": corpus.query.query_string,
        }
        artifact.documents = list(corpus.documents)
        checkpoint()

        enter("embed")
        matrix = embed_documents(corpus, runtime.embed_client, runtime.embed_cache)

        enter("reduce")
        n = len(corpus)
        if n < 4:
            raise ValidationError(f"need at least 4 documents to cluster, got {n}")
        settings = config.clustering
        target_dim = max(1, min(settings.target_dim, n - 1, matrix.dim))
        reduced = reduce_dimensions(matrix, target_dim)

        enter("select_k")
        k_min = max(2, settings.k_min)
        k_max = min(max(k_min, settings.resolved_k_max(n)), n - 1)
        sweep = sweep_num_clusters(reduced, (k_min, k_max), config.seed, settings)
        if not sweep:
            raise SelectionError(f"every fit in k range ({k_min}, {k_max}) was degenerate")
        artifact.model_selection = [
            {"k": k, "silhouette": score} for k, score, _ in sweep
        ]
        best_k, _, model = max(sweep, key=lambda item: (item[1], -item[0]))
        artifact.selected_k = best_k
        checkpoint()

        enter("assign")
        assignment = assign_documents(model, reduced, settings.membership_threshold)
        members = assignment.cluster_members()
        doc_map = corpus.document_map()
        artifact.clusters = [
            ClusterRecord(cluster_id=cid, doc_ids=list(doc_ids))
            for cid, doc_ids in sorted(members.items())
        ]
        checkpoint()

        enter("read_clusters")
        cluster_docs = {cid: [doc_map[d] for d in doc_ids] for cid, doc_ids in members.items()}
        reports = read_clusters(
            config.topic,
            cluster_docs,
            runtime.gateway,
            abstract_cap=config.abstract_cap,
            parallelism=config.reader_parallelism,
        )
        for record in artifact.clusters:
            record.report = reports[record.cluster_id]
        checkpoint()

        enter("partition")
        ordered = [reports[cid] for cid in sorted(reports)]
        retained, filtered = partition_reports(ordered)
        artifact.filtered_cluster_ids = [r.cluster_id for r in filtered]
        if not retained:
            raise ValidationError("every cluster was filtered as unrelated; nothing to organize")
        checkpoint()

        enter("organize")
        artifact.outline = organize(config.topic, retained, runtime.gateway)

        enter("persist")
        artifact.status = RunStatus.DONE
        artifact.stage = None
        artifact.mark_finished()
        artifact.check_invariants()
        checkpoint()
    except Exception as exc:
        artifact.status = RunStatus.FAILED
        artifact.failed_stage = stage
        artifact.error = str(exc)
        artifact.mark_finished()
        if store is not None:
            store.save(artifact)
        raise PipelineStageError(stage, exc) from exc
    return artifact


def default_retriever(artifact: RunArtifact, runtime: Runtime):
    """Scholar client when configured, else BM25 over the run's own corpus."""
    if runtime.scholar_client is not None:
        return ScholarRetriever(runtime.scholar_client)
    index = build_index(artifact.documents)
    return Bm25Retriever(index, artifact.document_map())


def expand_in_run(
    store: RunStore,
    run_id: str,
    cluster_id: int,
    k: int | None = None,
    runtime: Runtime | None = None,
    retriever=None,
) -> RunArtifact:
    """Expand one retained cluster and re-persist the artifact atomically.

    The expansion slot is idempotent: expanding the same cluster again
    replaces the previous record.
    """
    artifact = store.load(run_id)
    if artifact.status is not RunStatus.DONE:
        raise PreconditionError(f"run {run_id} is {artifact.status.value}, not DONE")
    record = artifact.cluster(cluster_id)
    if cluster_id in set(artifact.filtered_cluster_ids):
        raise PreconditionError(f"cluster {cluster_id} was filtered out; expansion unavailable")
    if record.report is None:
        raise PreconditionError(f"cluster {cluster_id} has no report")

    config = artifact.config
    runtime = runtime or build_runtime(config)
    k = k or config.expansion_k
    doc_map = artifact.document_map()
    docs = [doc_map[d] for d in record.doc_ids]

    keywords = extract_keywords(
        config.topic, record.report, docs, runtime.gateway, abstract_cap=config.abstract_cap
    )
    query = assemble_expansion_query(record.report, keywords, config.expansion_form)
    retriever = retriever or default_retriever(artifact, runtime)
    hits = expand_subtopic(query, retriever, k, cluster_doc_ids=record.doc_ids)

    artifact.expansions[cluster_id] = {
        "query": {
            "subtopic_title": query.subtopic_title,
            "terms": list(keywords.terms),
            "justification": keywords.justification,
            "form": config.expansion_form.value,
            "rendered": query.rendered,
        },
        "doc_ids": [hit.document.id for hit in hits],
        "documents": [hit.document.to_dict() for hit in hits],
        "duplicates": [hit.document.id for hit in hits if hit.duplicate],
    }
    store.save(artifact)
    return artifact
