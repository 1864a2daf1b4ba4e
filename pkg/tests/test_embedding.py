import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knav.corpus import Corpus, Document, TopicQuery
from knav.embedding import (
    EmbeddingCache,
    EmbeddingMatrix,
    HashingEmbeddingClient,
    HttpEmbeddingClient,
    cosine_similarity,
    embed_documents,
    embedding_text,
)
from knav.errors import DomainError, EmbeddingError, IntegrityError, ValidationError

from .conftest import CountingEmbedClient, make_doc


def corpus_of(docs):
    return Corpus(
        query=TopicQuery(topic="t", query_string="t", top_k=1000), documents=list(docs)
    )


class TestEmbeddingText:
    def test_abstract_preferred_over_snippet(self):
        doc = Document(id="d", title="A", abstract="B", snippet="C")
        assert embedding_text(doc) == "A\nB"

    def test_snippet_fallback(self):
        doc = Document(id="d", title="A", snippet="C")
        assert embedding_text(doc) == "A\nC"

    def test_title_only(self):
        assert embedding_text(Document(id="d", title="A")) == "A"

    def test_trailing_whitespace_trimmed(self):
        doc = Document(id="d", title="A", abstract="B  \n")
        assert embedding_text(doc) == "A\nB"


class TestEmbedDocuments:
    def test_cold_cache_populates(self, tmp_path):
        cache = EmbeddingCache(tmp_path / "cache")
        client = CountingEmbedClient()
        corpus = corpus_of([make_doc(i, abstract=f"text {i}") for i in range(3)])
        matrix = embed_documents(corpus, client, cache)
        assert matrix.vectors.shape == (3, 4)
        assert len(cache) == 3
        assert client.requests == 1  # one batch of three

    def test_warm_cache_skips_network(self, tmp_path):
        cache = EmbeddingCache(tmp_path / "cache")
        client = CountingEmbedClient()
        corpus = corpus_of([make_doc(i, abstract=f"text {i}") for i in range(3)])
        first = embed_documents(corpus, client, cache)
        requests_before = client.requests
        second = embed_documents(corpus, client, cache)
        assert client.requests == requests_before
        assert np.array_equal(first.vectors, second.vectors)

    def test_batch_count_is_ceiling(self):
        client = CountingEmbedClient(max_batch_size=256)
        corpus = corpus_of([make_doc(i, abstract=str(i)) for i in range(1000)])
        embed_documents(corpus, client, cache=None)
        assert client.requests == 4

    def test_row_order_matches_corpus(self):
        client = HashingEmbeddingClient(dim=16)
        docs = [make_doc(i, title=f"unique title {i}") for i in range(5)]
        corpus = corpus_of(docs)
        matrix = embed_documents(corpus, client)
        assert matrix.doc_ids == [d.id for d in docs]
        single = client.embed([embedding_text(docs[3])])[0]
        assert matrix.vectors[3] == pytest.approx(single)

    def test_provider_failure_lists_unembedded_docs(self):
        class FailingClient:
            model_id = "fail"
            max_batch_size = 2

            def embed(self, texts):
                raise ConnectionError("down")

        corpus = corpus_of([make_doc(i) for i in range(5)])
        with pytest.raises(EmbeddingError) as excinfo:
            embed_documents(corpus, FailingClient(), cache=None)
        assert excinfo.value.failed_doc_ids == [f"d{i}" for i in range(5)]

    def test_dimension_mismatch_across_batches(self):
        class RaggedClient:
            model_id = "ragged"
            max_batch_size = 2
            batch = 0

            def embed(self, texts):
                self.batch += 1
                dim = 3 if self.batch == 1 else 4
                return [[1.0] * dim for _ in texts]

        corpus = corpus_of([make_doc(i) for i in range(4)])
        with pytest.raises(IntegrityError):
            embed_documents(corpus, RaggedClient(), cache=None)

    def test_fixture_determinism(self):
        client = HashingEmbeddingClient(dim=32)
        corpus = corpus_of([make_doc(i, abstract=f"shared vocabulary {i}") for i in range(6)])
        m1 = embed_documents(corpus, client)
        m2 = embed_documents(corpus, client)
        assert np.array_equal(m1.vectors, m2.vectors)

    def test_cache_key_depends_on_model(self, tmp_path):
        cache = EmbeddingCache(tmp_path / "cache")
        corpus = corpus_of([make_doc(1, abstract="same text")])
        embed_documents(corpus, CountingEmbedClient(model_id="m1"), cache)
        other = CountingEmbedClient(model_id="m2")
        embed_documents(corpus, other, cache)
        assert other.requests == 1  # m1's entry must not satisfy m2


class TestEmbeddingMatrixInvariants:
    def test_zero_row_rejected(self):
        with pytest.raises(IntegrityError):
            EmbeddingMatrix(doc_ids=["a"], vectors=np.zeros((1, 3)), model_id="m")

    def test_non_finite_rejected(self):
        with pytest.raises(IntegrityError):
            EmbeddingMatrix(doc_ids=["a"], vectors=np.array([[np.nan, 1.0]]), model_id="m")

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValidationError):
            EmbeddingMatrix(doc_ids=["a", "b"], vectors=np.ones((1, 3)), model_id="m")


class TestCosineSimilarity:
    def test_self_similarity(self):
        assert cosine_similarity([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)

    def test_hand_value(self):
        assert cosine_similarity([1.0, 2.0], [2.0, 1.0]) == pytest.approx(0.8)

    def test_zero_vector_rejected(self):
        with pytest.raises(DomainError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            cosine_similarity([1.0], [1.0, 2.0])

    @given(
        st.lists(st.floats(-100, 100), min_size=2, max_size=6),
        st.floats(0.01, 50),
    )
    @settings(max_examples=60, deadline=None)
    def test_scale_invariance(self, values, alpha):
        u = np.asarray(values)
        if np.linalg.norm(u) < 1e-6:
            return
        v = u[::-1].copy()
        if np.linalg.norm(v) < 1e-6:
            return
        assert cosine_similarity(alpha * u, v) == pytest.approx(
            cosine_similarity(u, v), abs=1e-12
        )


class TestHttpEmbeddingClient:
    def test_posts_and_parses(self):
        import json

        import httpx

        def handler(request):
            payload = json.loads(request.content.decode())
            data = [{"embedding": [float(i + 1), 0.5]} for i, _ in enumerate(payload["input"])]
            return httpx.Response(200, json={"data": data})

        transport = httpx.MockTransport(handler)
        client = HttpEmbeddingClient(
            base_url="http://embed.test", model_id="m", transport=transport
        )
        vectors = client.embed(["a", "b"])
        assert vectors == [[1.0, 0.5], [2.0, 0.5]]

    def test_requires_base_url(self):
        with pytest.raises(EmbeddingError):
            HttpEmbeddingClient()
