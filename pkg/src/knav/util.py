"""Small shared helpers: retries, hashing, atomic JSON writes."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from pathlib import Path
from typing import Any, Callable, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")


def retry_with_backoff(
    fn: Callable[[], T],
    retries: int = 3,
    base_delay: float = 0.5,
    retry_on: tuple[type[Exception], ...] = (Exception,),
) -> T:
    """Call ``fn`` up to ``retries`` times, sleeping 2^i * base_delay between tries.

    Re-raises the last exception once attempts are exhausted.
    """
    last: Exception | None = None
    for attempt in range(retries):
        try:
            return fn()
        except retry_on as exc:
            last = exc
            if attempt < retries - 1:
                delay = base_delay * (2**attempt)
                log.warning("attempt %d/%d failed (%s); retrying in %.2fs", attempt + 1, retries, exc, delay)
                time.sleep(delay)
    assert last is not None
    raise last


def content_hash(*parts: str) -> str:
    """Stable hex digest of the given strings, order-sensitive."""
    h = hashlib.sha256()
    for part in parts:
        h.update(part.encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


def atomic_write_json(path: str | Path, payload: Any) -> None:
    """Write JSON via a temp file + rename so readers never see a torn file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
    os.replace(tmp, path)


def read_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))
