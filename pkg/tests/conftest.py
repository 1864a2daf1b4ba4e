import os

import pytest

from knav.corpus import Document


@pytest.fixture(autouse=True)
def scrub_env(monkeypatch):
    """Keep tests hermetic: no operator credentials or overrides leak in."""
    for var in list(os.environ):
        if var.startswith("KNAV_"):
            monkeypatch.delenv(var)


def make_doc(i: int, title: str | None = None, abstract: str | None = None, **kwargs) -> Document:
    return Document(
        id=f"d{i}",
        title=title or f"Document {i}",
        abstract=abstract,
        **kwargs,
    )


class FakeChatProvider:
    """Scripted chat provider: replies keyed by a prompt predicate or queued."""

    def __init__(self, replies=None, script=None):
        # replies: list popped in call order; script: callable prompt -> text
        self.replies = list(replies or [])
        self.script = script
        self.calls: list[str] = []

    def complete_text(self, request) -> str:
        self.calls.append(request.prompt)
        if self.script is not None:
            return self.script(request.prompt)
        if not self.replies:
            raise AssertionError("FakeChatProvider ran out of replies")
        return self.replies.pop(0)


class FailingChatProvider:
    def __init__(self, exc=None):
        self.exc = exc or ConnectionError("provider down")
        self.calls = 0

    def complete_text(self, request) -> str:
        self.calls += 1
        raise self.exc


class CountingEmbedClient:
    """Deterministic low-dim embedder that counts provider requests."""

    def __init__(self, dim: int = 4, max_batch_size: int = 256, model_id: str = "test-embed"):
        self.dim = dim
        self.max_batch_size = max_batch_size
        self.model_id = model_id
        self.requests = 0
        self.texts_seen: list[str] = []

    def embed(self, texts):
        self.requests += 1
        self.texts_seen.extend(texts)
        out = []
        for text in texts:
            h = abs(hash(text))
            vec = [((h >> (8 * j)) % 97) / 97.0 + 0.01 for j in range(self.dim)]
            out.append(vec)
        return out
