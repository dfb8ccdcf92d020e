"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class ThemekitError(Exception):
    """Base class for all engine errors."""


# --- domain / validation ---

class EmptyText(ThemekitError):
    pass


class EmptyTranscript(ThemekitError):
    pass


class ValidationFailed(ThemekitError):
    """Construction-time validation failure with field-level messages."""

    def __init__(self, fields: dict[str, str]):
        self.fields = dict(fields)
        super().__init__("; ".join(f"{k}: {v}" for k, v in sorted(self.fields.items())))


# --- provider / gateway ---

class ProviderUnreachable(ThemekitError):
    pass


class AuthFailed(ThemekitError):
    pass


class RetriesExhausted(ThemekitError):
    pass


class ResponseEmpty(ThemekitError):
    pass


class SchemaViolationAfterRepair(ThemekitError):
    """Structured output stayed invalid after the repair budget.

    Carries every raw model attempt so the audit trail is complete.
    """

    def __init__(self, schema_id: str, attempts: list[str]):
        self.schema_id = schema_id
        self.attempts = list(attempts)
        super().__init__(f"schema {schema_id!r} violated after {len(attempts)} attempts")


# --- agents ---

class PartitionViolation(ThemekitError):
    pass


class UnknownCodeReference(ThemekitError):
    pass


class UnknownThemeReference(ThemekitError):
    pass


class ActionReplayMismatch(ThemekitError):
    pass


class OutOfRangeScore(ThemekitError):
    pass


# --- orchestrator / sessions ---

class IllegalPhase(ThemekitError):
    pass


class InvalidPayload(ThemekitError):
    pass


class IterationCapReached(ThemekitError):
    pass


class CheckpointCorrupt(ThemekitError):
    pass


class SessionNotFound(ThemekitError):
    pass
