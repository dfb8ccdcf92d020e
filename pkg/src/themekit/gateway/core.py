"""Gateway: retries, auditing, embeddings and structured calls over a provider."""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass

import numpy as np

from ..errors import ResponseEmpty, RetriesExhausted, SchemaViolationAfterRepair
from .audit import AuditLog
from .mock import MockProvider
from .remote import RemoteProvider, TransientFailure
from .structured import StructuredOutputError, parse_and_validate
from .types import ChatRequest, EmbeddingVector, ProviderConfig, ProviderKind

REPAIR_BUDGET = 2  # extra turns after the first failed parse


def build_provider(config: ProviderConfig, seed: int = 0,
                   embed_model: str = "all-MiniLM-L6-v2"):
    if config.kind is ProviderKind.MOCK:
        return MockProvider(seed=seed)
    return RemoteProvider(config, embed_model=embed_model)


def _request_sha(request: ChatRequest) -> str:
    blob = json.dumps([list(m) for m in request.messages], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class ChatResult:
    text: str
    usage: dict


class Gateway:
    """Uniform chat/embed access with per-attempt audit entries.

    Retries apply only to remote providers; the mock never sleeps and its
    failures are never transient.
    """

    def __init__(self, provider, audit: AuditLog | None = None,
                 config: ProviderConfig | None = None,
                 embed_model: str = "all-MiniLM-L6-v2",
                 max_in_flight: int = 4,
                 clock=None):
        self.provider = provider
        self.audit = audit if audit is not None else AuditLog()
        self.config = config or ProviderConfig()
        self.embed_model = embed_model
        self._sem = threading.Semaphore(max_in_flight)
        self._clock = clock

    def _now(self) -> str:
        if self._clock is not None:
            return self._clock.now()
        from datetime import datetime, timezone
        return datetime.now(timezone.utc).isoformat()

    def _log(self, kind: str, sha: str, status: str, detail: str = "") -> None:
        self.audit.append({
            "ts": self._now(), "kind": kind, "provider": self.provider.name,
            "request_sha": sha, "status": status, "detail": detail,
        })

    # -- chat ----------------------------------------------------------------

    def chat(self, request: ChatRequest) -> ChatResult:
        sha = _request_sha(request)
        is_mock = isinstance(self.provider, MockProvider)
        attempts = 0
        while True:
            with self._sem:
                try:
                    text, usage = self.provider.chat_once(request)
                except TransientFailure as e:
                    self._log("chat", sha, "transient_error", str(e))
                    attempts += 1
                    if attempts > self.config.max_retries:
                        raise RetriesExhausted(
                            f"gave up after {attempts} attempts: {e}") from e
                    if not is_mock:
                        backoff = self.config.retry_backoff
                        time.sleep(backoff[min(attempts - 1, len(backoff) - 1)])
                    continue
                except Exception as e:
                    self._log("chat", sha, "error", str(e))
                    raise
            if not text.strip():
                self._log("chat", sha, "empty")
                raise ResponseEmpty("provider returned empty assistant text")
            self._log("chat", sha, "ok")
            return ChatResult(text=text, usage=usage)

    # -- embeddings ----------------------------------------------------------

    def embed(self, texts: list[str]) -> list[EmbeddingVector]:
        if not texts or any(not t.strip() for t in texts):
            raise ValueError("texts must be non-empty, each non-empty")
        sha = hashlib.sha256("\x00".join(texts).encode()).hexdigest()[:16]
        with self._sem:
            try:
                raw = self.provider.embed_once(texts, self.embed_model)
            except Exception as e:
                self._log("embed", sha, "error", str(e))
                raise
        self._log("embed", sha, "ok")
        return [EmbeddingVector(values=tuple(v), model=self.embed_model) for v in raw]

    def embed_matrix(self, texts: list[str]) -> np.ndarray:
        return np.array([v.values for v in self.embed(texts)], dtype=float)

    # -- structured calls ----------------------------------------------------

    def structured_call(self, request: ChatRequest, schema_id: str) -> dict:
        attempts: list[str] = []
        req = request
        for _ in range(1 + REPAIR_BUDGET):
            result = self.chat(req)
            attempts.append(result.text)
            try:
                return parse_and_validate(result.text, schema_id)
            except StructuredOutputError as e:
                req = req.with_turns(
                    ("assistant", result.text),
                    ("user",
                     f"Your previous response was rejected: {e}. "
                     f"Reply again with only a valid JSON object for "
                     f'schema "{schema_id}".'),
                )
        raise SchemaViolationAfterRepair(schema_id, attempts)
