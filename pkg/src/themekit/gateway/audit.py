"""Append-only JSON-lines audit log for provider calls and session events."""

from __future__ import annotations

import json
import threading
from pathlib import Path


class AuditLog:
    """Thread-safe append-only JSONL log.

    With no path, entries are kept in memory only (tests, ad-hoc use).
    """

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._lock = threading.Lock()
        self._entries: list[dict] = []
        if self.path is not None and self.path.exists():
            with self.path.open() as fh:
                self._entries = [json.loads(line) for line in fh if line.strip()]

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, sort_keys=True)
        with self._lock:
            self._entries.append(entry)
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a") as fh:
                    fh.write(line + "\n")

    def entries(self) -> list[dict]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
