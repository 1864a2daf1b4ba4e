"""Scholar-search clients: one contract, a fixture reader, and an HTTP stub."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Protocol

import httpx

from .corpus import Document
from .errors import RetrievalError
from .util import retry_with_backoff


class ScholarClient(Protocol):
    page_size: int

    def search(self, query_string: str, page: int, page_size: int) -> list[Document]:
        """Return one page of results in engine rank order (1-based pages)."""
        ...


class FixtureScholarClient:
    """Serves canned result pages from ``page_1.json``, ``page_2.json``, ...

    Each file is a JSON array of document objects. Missing page files mean
    the result set is exhausted. ``page_size`` is advisory only: pages are
    returned exactly as stored, mirroring whatever the engine returned.
    """

    def __init__(self, pages_dir: str | Path, page_size: int = 10):
        self.pages_dir = Path(pages_dir)
        self.page_size = page_size
        self.requests: list[tuple[str, int]] = []

    def search(self, query_string: str, page: int, page_size: int) -> list[Document]:
        self.requests.append((query_string, page))
        path = self.pages_dir / f"page_{page}.json"
        if not path.exists():
            return []
        raw = json.loads(path.read_text(encoding="utf-8"))
        return [Document.from_dict(item) for item in raw]


class HttpScholarClient:
    """Thin client for a generic paged search endpoint.

    GET {base_url}/search?q=...&page=...&page_size=... is expected to return
    {"results": [{id, title, abstract?, snippet?, url?, year?}, ...]}.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        page_size: int = 20,
        retries: int = 3,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = (base_url or os.environ.get("KNAV_SCHOLAR_BASE_URL", "")).rstrip("/")
        if not self.base_url:
            raise RetrievalError("scholar client needs a base URL (KNAV_SCHOLAR_BASE_URL)")
        self.api_key = api_key or os.environ.get("KNAV_SCHOLAR_API_KEY")
        self.page_size = page_size
        self.retries = retries
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def search(self, query_string: str, page: int, page_size: int) -> list[Document]:
        params = {"q": query_string, "page": page, "page_size": page_size}
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}

        def call() -> list[Document]:
            resp = self._client.get(f"{self.base_url}/search", params=params, headers=headers)
            resp.raise_for_status()
            return [Document.from_dict(item) for item in resp.json().get("results", [])]

        try:
            return retry_with_backoff(call, retries=self.retries, base_delay=0.5)
        except Exception as exc:
            raise RetrievalError(f"scholar search failed: {exc}", last_page=page) from exc
