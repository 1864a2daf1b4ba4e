"""Document embeddings: provider clients, a content-hash cache, similarity."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import numpy as np

from .corpus import Corpus, Document
from .errors import DomainError, EmbeddingError, IntegrityError, ValidationError
from .util import content_hash, retry_with_backoff

log = logging.getLogger(__name__)


@dataclass
class EmbeddingMatrix:
    """One L2-unnormalized vector per document, rows in corpus order."""

    doc_ids: list[str]
    vectors: np.ndarray
    model_id: str

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.doc_ids):
            raise ValidationError("vectors must be one row per doc id")
        if self.vectors.shape[1] < 1:
            raise ValidationError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(self.vectors)):
            raise IntegrityError("embedding matrix contains non-finite values")
        if np.any(np.all(self.vectors == 0.0, axis=1)):
            raise IntegrityError("embedding matrix contains an all-zero row")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


class EmbeddingClient(Protocol):
    model_id: str
    max_batch_size: int

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        """Embed texts, returning vectors in input order."""
        ...


class HashingEmbeddingClient:
    """Deterministic offline embedder via token feature hashing.

    Each lowercase alphanumeric token is hashed into ``dim`` buckets with a
    signed contribution; vectors are L2-normalized. Documents that share
    vocabulary land near each other, which is enough for offline runs, demos,
    and tests. Not a substitute for a learned model.
    """

    def __init__(self, dim: int = 64, model_id: str = "hash-v1", max_batch_size: int = 512):
        self.dim = dim
        self.model_id = model_id
        self.max_batch_size = max_batch_size

    def _vector(self, text: str) -> list[float]:
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in re.findall(r"[a-z0-9]+", text.lower()):
            digest = hashlib.md5(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:4], "little") % self.dim
            sign = 1.0 if digest[4] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            # Tokenless text still needs a valid direction; derive one from raw bytes.
            digest = hashlib.md5(text.encode("utf-8")).digest()
            vec[digest[0] % self.dim] = 1.0
            norm = 1.0
        return (vec / norm).tolist()

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._vector(t) for t in texts]


class HttpEmbeddingClient:
    """Client for an "embed these strings, get same-order vectors" endpoint.

    POST {base_url}/embeddings with {"model", "input": [...]} returning
    {"data": [{"embedding": [...]}, ...]} in input order.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model_id: str | None = None,
        max_batch_size: int = 256,
        retries: int = 3,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = (base_url or os.environ.get("KNAV_EMBED_BASE_URL", "")).rstrip("/")
        if not self.base_url:
            raise EmbeddingError("embedding client needs a base URL (KNAV_EMBED_BASE_URL)")
        self.api_key = api_key or os.environ.get("KNAV_EMBED_API_KEY")
        self.model_id = model_id or os.environ.get("KNAV_EMBED_MODEL", "default-embedder")
        self.max_batch_size = max_batch_size
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {"model": self.model_id, "input": list(texts)}

        def call() -> list[list[float]]:
            resp = self._client.post(f"{self.base_url}/embeddings", json=payload, headers=headers)
            resp.raise_for_status()
            data = resp.json()["data"]
            return [item["embedding"] for item in data]

        vectors = retry_with_backoff(call, retries=self.retries, base_delay=0.5)
        if len(vectors) != len(texts):
            raise IntegrityError(f"provider returned {len(vectors)} vectors for {len(texts)} texts")
        return vectors


class EmbeddingCache:
    """Directory of vector files keyed by hex content hash.

    The key covers (model_id, text) so switching embedders never reuses
    stale vectors. Writes are last-write-wins on identical values.
    """

    def __init__(self, cache_dir: str | Path | None = None):
        root = cache_dir or os.environ.get("KNAV_CACHE_DIR") or ".knav-cache"
        self.cache_dir = Path(root)
        self.cache_dir.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(model_id: str, text: str) -> str:
        return content_hash(model_id, text)

    def _path(self, key: str) -> Path:
        return self.cache_dir / f"{key}.json"

    def get(self, key: str) -> list[float] | None:
        path = self._path(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, key: str, vector: list[float]) -> None:
        self._path(key).write_text(json.dumps(vector), encoding="utf-8")

    def __len__(self) -> int:
        return sum(1 for _ in self.cache_dir.glob("*.json"))


def embedding_text(doc: Document) -> str:
    """Text a document is embedded as: title, newline, abstract or snippet."""
    body = doc.abstract if doc.abstract else doc.snippet
    text = doc.title if not body else f"{doc.title}\n{body}"
    return text.rstrip()


def embed_texts(
    texts: Sequence[str],
    ids: Sequence[str],
    client: EmbeddingClient,
    cache: EmbeddingCache | None = None,
) -> EmbeddingMatrix:
    """Embed raw texts; cache hits skip the provider, misses are batched.

    All batches must agree on dimension; a provider failure reports every id
    that was left unembedded.
    """
    keys = [EmbeddingCache.key(client.model_id, t) for t in texts]
    vectors: list[list[float] | None] = [None] * len(texts)

    if cache is not None:
        for i, key in enumerate(keys):
            vectors[i] = cache.get(key)

    missing = [i for i, v in enumerate(vectors) if v is None]
    batch_size = max(1, int(client.max_batch_size))
    for start in range(0, len(missing), batch_size):
        batch_idx = missing[start : start + batch_size]
        batch_texts = [texts[i] for i in batch_idx]
        try:
            batch_vectors = client.embed(batch_texts)
        except IntegrityError:
            raise
        except Exception as exc:
            failed = [ids[i] for i in missing[start:]]
            raise EmbeddingError(f"provider failed: {exc}", failed_doc_ids=failed) from exc
        if len(batch_vectors) != len(batch_texts):
            raise IntegrityError(
                f"provider returned {len(batch_vectors)} vectors for {len(batch_texts)} texts"
            )
        for i, vec in zip(batch_idx, batch_vectors):
            vectors[i] = list(vec)
            if cache is not None:
                cache.put(keys[i], vectors[i])

    dims = {len(v) for v in vectors if v is not None}
    if len(dims) > 1:
        raise IntegrityError(f"embedding dimension mismatch across batches: {sorted(dims)}")

    matrix = np.asarray(vectors, dtype=np.float64)
    return EmbeddingMatrix(doc_ids=list(ids), vectors=matrix, model_id=client.model_id)


def embed_documents(
    corpus: Corpus,
    client: EmbeddingClient,
    cache: EmbeddingCache | None = None,
) -> EmbeddingMatrix:
    """Embed a corpus, row order matching corpus order."""
    texts = [embedding_text(doc) for doc in corpus.documents]
    return embed_texts(texts, corpus.ids(), client, cache)


def cosine_similarity(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """dot(u, v) / (|u| |v|); raises DomainError on zero vectors."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DomainError("cosine similarity is undefined for zero vectors")
    value = float(np.dot(u, v) / (nu * nv))
    return max(-1.0, min(1.0, value)) if math.isfinite(value) else value
