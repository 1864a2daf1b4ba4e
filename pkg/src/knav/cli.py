"""Command-line interface: run the pipeline, serve the API, build indexes, evaluate."""

from __future__ import annotations

import json
import logging
import sys

import click

from .clustering import EmSettings
from .corpus import TopicQuery, load_corpus_jsonl, load_document_store
from .errors import KnavError, PipelineStageError
from .eval_harness import run_clustrec_eval, run_queries_eval, run_scitoc_eval
from .retrieval import Bm25Index, build_index, search
from .service import RunConfig, RunStore, expand_in_run, run_pipeline

log = logging.getLogger(__name__)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable debug logging.")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


def _print_outline(artifact) -> None:
    reports = {c.cluster_id: c.report for c in artifact.clusters}
    click.echo(f"\nTopic: {artifact.config.topic}")
    click.echo(f"Documents: {artifact.corpus_summary.get('doc_count')}  "
               f"Clusters: {len(artifact.clusters)}  (k={artifact.selected_k})")
    if artifact.outline is None:
        return
    for theme in sorted(artifact.outline.themes, key=lambda t: t.theme_id):
        click.echo(f"\n[{theme.theme_id}] {theme.title}")
        for cid in artifact.outline.members(theme.theme_id):
            report = reports[cid]
            docs = len(report.doc_ids) if report else 0
            title = report.subtopic_title if report else f"cluster {cid}"
            score = f" ({report.relatedness}/5)" if report else ""
            click.echo(f"    - {title}{score} [{docs} papers]")
    if artifact.filtered_cluster_ids:
        click.echo(f"\nFiltered clusters: {sorted(artifact.filtered_cluster_ids)}")


@main.command("run")
@click.option("--topic", required=True, help="Broad topic to organize.")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), help="Corpus JSONL file.")
@click.option("--query", "query_string", default=None, help="Live search query (needs a scholar client).")
@click.option("--llm", "llm_mode", type=click.Choice(["live", "record", "replay"]), default="replay")
@click.option("--transcript", "transcript_path", type=click.Path(), default=None)
@click.option("--out", "runs_dir", type=click.Path(), default="runs", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--top-k", type=int, default=1000, show_default=True)
@click.option("--k-min", type=int, default=2, show_default=True)
@click.option("--k-max", type=int, default=None)
@click.option("--target-dim", type=int, default=10, show_default=True)
@click.option("--embed", "embed_provider", type=click.Choice(["hash", "http"]), default="hash")
@click.option("--expansion-form", type=click.Choice(["concat", "boolean_or"]), default="concat")
@click.option("--scholar-fixture", "scholar_fixture_dir", type=click.Path(), default=None,
              help="Directory of canned scholar result pages.")
def run_cmd(topic, corpus_path, query_string, llm_mode, transcript_path, runs_dir, seed,
            top_k, k_min, k_max, target_dim, embed_provider, expansion_form, scholar_fixture_dir):
    """Run the full pipeline and persist the run artifact."""
    config = RunConfig(
        topic=topic,
        corpus_path=corpus_path,
        query_string=query_string,
        top_k=top_k,
        seed=seed,
        clustering=EmSettings(k_min=k_min, k_max=k_max, target_dim=target_dim),
        llm_mode=llm_mode,
        transcript_path=transcript_path,
        embed_provider=embed_provider,
        expansion_form=expansion_form,
        scholar_fixture_dir=scholar_fixture_dir,
    )
    store = RunStore(runs_dir)
    try:
        artifact = run_pipeline(config, store=store)
    except PipelineStageError as exc:
        raise click.ClickException(str(exc))
    except KnavError as exc:
        raise click.ClickException(str(exc))
    click.echo(f"run {artifact.run_id}: {artifact.status.value}")
    _print_outline(artifact)


@main.command("expand")
@click.option("--runs-dir", type=click.Path(exists=True), default="runs", show_default=True)
@click.option("--run-id", required=True)
@click.option("--cluster", "cluster_id", type=int, required=True)
@click.option("--k", type=int, default=None, help="Documents to retrieve (default: run config).")
def expand_cmd(runs_dir, run_id, cluster_id, k):
    """Expand one retained subtopic cluster with fresh retrieval."""
    store = RunStore(runs_dir)
    try:
        artifact = expand_in_run(store, run_id, cluster_id, k=k)
    except KnavError as exc:
        raise click.ClickException(str(exc))
    record = artifact.expansions[cluster_id]
    click.echo(f"query: {record['query']['rendered']}")
    click.echo(f"retrieved {len(record['doc_ids'])} documents "
               f"({len(record['duplicates'])} already in the cluster)")


@main.command("serve")
@click.option("--port", type=int, default=8080, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--runs-dir", type=click.Path(), default="runs", show_default=True)
def serve_cmd(port, host, runs_dir):
    """Serve the run API for the browser UI."""
    import uvicorn

    from .service.api import create_app

    uvicorn.run(create_app(runs_dir), host=host, port=port)


@main.group("index")
def index_group():
    """Build and query BM25 indexes."""


@index_group.command("build")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--k1", type=float, default=1.2, show_default=True)
@click.option("--b", type=float, default=0.75, show_default=True)
def index_build_cmd(corpus_path, out_path, k1, b):
    """Index a JSONL corpus for BM25 search."""
    docs = list(load_document_store(corpus_path).values())
    index = build_index(docs, k1=k1, b=b)
    index.save(out_path)
    click.echo(f"indexed {index.doc_count} docs -> {out_path}")


@index_group.command("search")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--query", required=True)
@click.option("--k", type=int, default=10, show_default=True)
def index_search_cmd(index_path, query, k):
    """Search a stored index."""
    index = Bm25Index.load(index_path)
    for doc_id, score in search(index, query, k):
        click.echo(f"{score:10.4f}  {doc_id}")


@main.group("eval")
def eval_group():
    """Benchmark evaluations; each writes a report bundle plus figures."""


@eval_group.command("clustrec")
@click.option("--qrels", "qrels_path", type=click.Path(exists=True), required=True)
@click.option("--topics", "topics_path", type=click.Path(exists=True), required=True,
              help="JSON map of topic id to title.")
@click.option("--docs", "docs_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--p", type=float, default=80.0, show_default=True)
@click.option("--embed", "embed_provider", type=click.Choice(["hash", "http"]), default="hash")
@click.option("--k-min", type=int, default=2, show_default=True)
@click.option("--k-max", type=int, default=None)
def eval_clustrec_cmd(qrels_path, topics_path, docs_path, out_dir, seed, p, embed_provider, k_min, k_max):
    """Cluster gold benchmark docs; report ARI/NMI and navigation cost."""
    settings = EmSettings(k_min=k_min, k_max=k_max)
    result = run_clustrec_eval(
        qrels_path, topics_path, docs_path, out_dir,
        seed=seed, p=p, embed_provider=embed_provider, settings=settings,
    )
    click.echo(result["paths"]["txt"].read_text())


@eval_group.command("queries")
@click.option("--index", "index_path", type=click.Path(exists=True), required=True)
@click.option("--queries", "queries_path", type=click.Path(exists=True), required=True,
              help="JSONL rows {topic_id, query, method?}.")
@click.option("--qrels", "qrels_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--ks", default="20,70,100,200", show_default=True)
def eval_queries_cmd(index_path, queries_path, qrels_path, out_dir, ks):
    """Score generated queries with BM25 precision/recall@K."""
    k_values = [int(k) for k in ks.split(",") if k]
    result = run_queries_eval(index_path, queries_path, qrels_path, out_dir, ks=k_values)
    click.echo(result["paths"]["txt"].read_text())


@eval_group.command("scitoc")
@click.option("--scitoc", "scitoc_path", type=click.Path(exists=True), required=True)
@click.option("--titles", "titles_path", type=click.Path(exists=True), required=True,
              help="JSON map of review title to generated subtopic titles.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--embed", "embed_provider", type=click.Choice(["hash", "http"]), default="hash")
def eval_scitoc_cmd(scitoc_path, titles_path, out_dir, embed_provider):
    """Soft heading recall of generated titles against review TOCs."""
    result = run_scitoc_eval(scitoc_path, titles_path, out_dir, embed_provider=embed_provider)
    click.echo(result["paths"]["txt"].read_text())


@main.command("corpus-info")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--topic", default="corpus")
def corpus_info_cmd(corpus_path, topic):
    """Quick sanity check of a corpus file."""
    corpus = load_corpus_jsonl(corpus_path, TopicQuery(topic=topic, query_string=topic))
    with_abstract = sum(1 for d in corpus.documents if d.abstract)
    click.echo(json.dumps(
        {"documents": len(corpus), "with_abstract": with_abstract}, indent=2
    ))


if __name__ == "__main__":
    sys.exit(main())
