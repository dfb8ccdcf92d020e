"""Wire-level request/response types for chat and embedding providers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from ..errors import ValidationFailed


class ResponseFormat(str, Enum):
    FREE_TEXT = "free_text"
    JSON_OBJECT = "json_object"


_ROLES = {"system", "user", "assistant"}


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int | None = None
    response_format: ResponseFormat = ResponseFormat.FREE_TEXT

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(tuple(m) for m in self.messages))
        if not self.messages:
            raise ValidationFailed({"messages": "must be non-empty"})
        for role, _ in self.messages:
            if role not in _ROLES:
                raise ValidationFailed({"messages": f"unknown role {role!r}"})
        if self.messages[0][0] not in ("system", "user"):
            raise ValidationFailed(
                {"messages": "first message role must be system or user"})

    def with_turns(self, *turns: tuple[str, str]) -> "ChatRequest":
        return ChatRequest(
            model=self.model,
            messages=self.messages + tuple(turns),
            temperature=self.temperature,
            max_output_tokens=self.max_output_tokens,
            response_format=self.response_format,
        )


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model: str

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationFailed({"values": "all values must be finite"})

    @property
    def dimension(self) -> int:
        return len(self.values)


class ProviderKind(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"


@dataclass(frozen=True)
class ProviderConfig:
    kind: ProviderKind = ProviderKind.MOCK
    base_url: str | None = None
    api_key: str | None = None
    timeout: float = 60.0
    max_retries: int = 3
    retry_backoff: tuple[float, ...] = (0.5, 1.0, 2.0)

    def __post_init__(self):
        object.__setattr__(self, "retry_backoff", tuple(self.retry_backoff))
        if self.kind is ProviderKind.REMOTE and not self.base_url:
            raise ValidationFailed({"base_url": "remote provider requires a base_url"})
