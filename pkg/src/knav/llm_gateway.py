"""Single point of contact with the chat provider.

Supports structured-output requests with one automatic repair round, and a
record/replay transcript so every pipeline stage can run deterministically
with zero network traffic.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Protocol

import httpx

from .errors import ConfigError, GatewayError, MalformedOutputError, ReplayMissError, ValidationError
from .util import content_hash, retry_with_backoff

log = logging.getLogger(__name__)

JSON_REPAIR_SUFFIX = "\nReturn valid JSON only."


class Mode(str, Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class Expect(str, Enum):
    JSON = "json"
    TAGGED_TEXT = "tagged_text"


@dataclass(frozen=True)
class LlmRequest:
    prompt: str
    expect: Expect = Expect.JSON
    temperature: float = 0.0
    model_id: str = "fixture-llm"
    max_output_tokens: int = 2048

    def __post_init__(self):
        if not self.prompt:
            raise ValidationError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")

    @property
    def fingerprint(self) -> str:
        return content_hash(self.model_id, repr(self.temperature), self.prompt)


class Transcript:
    """Fingerprint -> response map backed by an append-only JSONL file."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self.entries: dict[str, str] = {}
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for lineno, line in enumerate(fh, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    record = json.loads(line)
                    fingerprint = record["fingerprint"]
                    if fingerprint in self.entries:
                        log.warning("duplicate fingerprint at line %d; first one kept", lineno)
                        continue
                    self.entries[fingerprint] = record["response"]

    def get(self, fingerprint: str) -> str | None:
        return self.entries.get(fingerprint)

    def append(self, fingerprint: str, response: str) -> None:
        with self._lock:
            if fingerprint in self.entries:
                return
            self.entries[fingerprint] = response
            if self.path:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(
                        json.dumps({"fingerprint": fingerprint, "response": response}) + "\n"
                    )

    def __len__(self) -> int:
        return len(self.entries)


class ChatProvider(Protocol):
    def complete_text(self, request: LlmRequest) -> str: ...


class HttpChatProvider:
    """OpenAI-style chat-completions client.

    POST {base_url}/chat/completions with model/messages/temperature and read
    choices[0].message.content.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = (base_url or os.environ.get("KNAV_LLM_BASE_URL", "")).rstrip("/")
        if not self.base_url:
            raise ConfigError("chat provider needs a base URL (KNAV_LLM_BASE_URL)")
        self.api_key = api_key or os.environ.get("KNAV_LLM_API_KEY")
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def complete_text(self, request: LlmRequest) -> str:
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        payload = {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        resp = self._client.post(f"{self.base_url}/chat/completions", json=payload, headers=headers)
        resp.raise_for_status()
        return resp.json()["choices"][0]["message"]["content"]


def default_model_id() -> str:
    return os.environ.get("KNAV_LLM_MODEL", "fixture-llm")


@dataclass
class Gateway:
    """Completion front-end owning the mode, transcript, and retry policy."""

    mode: Mode = Mode.REPLAY
    provider: ChatProvider | None = None
    transcript: Transcript | None = None
    model_id: str = field(default_factory=default_model_id)
    retries: int = 3
    backoff: float = 0.5
    call_count: int = 0
    provider_calls: int = 0

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.mode is Mode.REPLAY and self.transcript is None:
            raise ConfigError("REPLAY mode requires a transcript")
        if self.mode in (Mode.LIVE, Mode.RECORD) and self.provider is None:
            raise ConfigError(f"{self.mode.value.upper()} mode requires a provider")
        self._lock = threading.Lock()

    def complete(self, request: LlmRequest) -> str:
        with self._lock:
            self.call_count += 1
        fingerprint = request.fingerprint

        if self.mode is Mode.REPLAY:
            stored = self.transcript.get(fingerprint)
            if stored is None:
                raise ReplayMissError(fingerprint)
            return stored

        if self.mode is Mode.RECORD and self.transcript is not None:
            stored = self.transcript.get(fingerprint)
            if stored is not None:
                return stored

        def call() -> str:
            with self._lock:
                self.provider_calls += 1
            return self.provider.complete_text(request)

        try:
            response = retry_with_backoff(call, retries=self.retries, base_delay=self.backoff)
        except Exception as exc:
            raise GatewayError(f"provider failed after {self.retries} attempts: {exc}") from exc

        if self.mode is Mode.RECORD and self.transcript is not None:
            self.transcript.append(fingerprint, response)
        return response

    def complete_json(self, request: LlmRequest) -> Any:
        """Parse a JSON reply, tolerating code fences and trailing prose.

        On a parse failure one repair request is issued with an explicit
        "valid JSON only" instruction; a second failure raises.
        """
        if request.expect is not Expect.JSON:
            raise ValidationError("complete_json requires a request expecting JSON")
        reply = self.complete(request)
        try:
            return extract_json_value(reply)
        except ValueError:
            log.warning("unparseable JSON reply; issuing one repair request")
        repair = LlmRequest(
            prompt=request.prompt + JSON_REPAIR_SUFFIX,
            expect=Expect.JSON,
            temperature=request.temperature,
            model_id=request.model_id,
            max_output_tokens=request.max_output_tokens,
        )
        reply = self.complete(repair)
        try:
            return extract_json_value(reply)
        except ValueError as exc:
            raise MalformedOutputError(f"reply is not valid JSON after repair: {exc}", raw=reply)


_FENCE = re.compile(r"```(?:json)?\s*(.*?)```", re.DOTALL)


def extract_json_value(text: str) -> Any:
    """Parse JSON out of a model reply.

    Order of attempts: fenced block interior, the whole string, then the
    longest valid JSON value starting at each '{' or '[' (handles replies
    with trailing prose).
    """
    fenced = _FENCE.search(text)
    candidate = (fenced.group(1) if fenced else text).strip()
    try:
        return json.loads(candidate)
    except json.JSONDecodeError:
        pass
    decoder = json.JSONDecoder()
    for i, ch in enumerate(candidate):
        if ch in "{[":
            try:
                value, _ = decoder.raw_decode(candidate[i:])
                return value
            except json.JSONDecodeError:
                continue
    raise ValueError("no JSON value found in reply")
