from .audit import AuditLog
from .core import Gateway, build_provider
from .mock import MockProvider, hash_vector
from .remote import RemoteProvider
from .types import ChatRequest, EmbeddingVector, ProviderConfig, ProviderKind, ResponseFormat

__all__ = [
    "AuditLog", "Gateway", "build_provider",
    "MockProvider", "hash_vector", "RemoteProvider",
    "ChatRequest", "EmbeddingVector", "ProviderConfig", "ProviderKind",
    "ResponseFormat",
]
