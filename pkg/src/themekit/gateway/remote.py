"""Chat/embedding client for OpenAI-compatible HTTP endpoints."""

from __future__ import annotations

import os

import httpx

from ..errors import AuthFailed, ProviderUnreachable
from .types import ProviderConfig, ResponseFormat

API_KEY_ENV = "TAMA_API_KEY"


class TransientFailure(Exception):
    """Retryable transport failure: timeout, connection error, 429 or 5xx."""


class RemoteProvider:
    name = "remote"

    def __init__(self, config: ProviderConfig, embed_model: str = "all-MiniLM-L6-v2"):
        self.config = config
        self.embed_model = embed_model
        key = config.api_key or os.environ.get(API_KEY_ENV, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            headers=headers,
            timeout=config.timeout,
        )

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self._client.post(path, json=payload)
        except (httpx.TimeoutException, httpx.ConnectError) as e:
            raise TransientFailure(str(e)) from e
        if resp.status_code in (401, 403):
            raise AuthFailed(f"provider returned {resp.status_code}")
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransientFailure(f"provider returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderUnreachable(
                f"provider returned {resp.status_code}: {resp.text[:200]}")
        return resp.json()

    def chat_once(self, request) -> tuple[str, dict]:
        payload = {
            "model": request.model,
            "messages": [{"role": r, "content": c} for r, c in request.messages],
            "temperature": request.temperature,
        }
        if request.max_output_tokens is not None:
            payload["max_tokens"] = request.max_output_tokens
        if request.response_format is ResponseFormat.JSON_OBJECT:
            payload["response_format"] = {"type": "json_object"}
        data = self._post("/chat/completions", payload)
        choices = data.get("choices") or []
        text = ""
        if choices:
            text = (choices[0].get("message") or {}).get("content") or ""
        return text, data.get("usage", {})

    def embed_once(self, texts: list[str], model: str) -> list[list[float]]:
        data = self._post("/embeddings", {"model": model, "input": texts})
        items = sorted(data.get("data", []), key=lambda d: d.get("index", 0))
        return [item["embedding"] for item in items]

    def close(self) -> None:
        self._client.close()
