"""Per-session directory store with schema-validated JSON artifacts.

Layout per session:
    <root>/<session_id>/
        session.json
        checkpoints/NNN.json
        audit.jsonl
        artifacts/transcripts.json
        artifacts/chunks.json
        artifacts/codes/chunk_NNNN.json
        artifacts/codes.json
        artifacts/groups.json
        artifacts/themes/vN.json
        artifacts/feedback/iterNNN.json
        artifacts/actions/iterNNN.json
        artifacts/geval/iterNNN.json
        artifacts/decisions/NNN.json
        artifacts/metrics/<sha>.json
"""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources
from pathlib import Path

import jsonschema

from .errors import CheckpointCorrupt, SessionNotFound


def load_schema() -> dict:
    raw = resources.files("themekit.schemas").joinpath("session.schema.json")
    return json.loads(raw.read_text())


_SCHEMA = load_schema()

# artifact kind -> definition name in the published schema
_ARTIFACT_DEFS = {
    "session": "session_state",
    "transcripts": "transcript_list",
    "chunks": "chunk_list",
    "chunk_codes": "chunk_codes",
    "codes": "code_list",
    "groups": "code_group_list",
    "theme_set": "theme_set",
    "feedback": "criterion_feedback_list",
    "actions": "refinement_action_list",
    "decision": "expert_decision",
    "checkpoint": "checkpoint",
    "geval": "geval_score",
    "metrics_report": "metrics_report",
}


def validate_artifact(kind: str, data) -> None:
    schema = {"$ref": f"#/$defs/{_ARTIFACT_DEFS[kind]}", "$defs": _SCHEMA["$defs"]}
    jsonschema.validate(data, schema)


def canonical_json(data) -> str:
    return json.dumps(data, indent=1, sort_keys=True)


def state_hash(state_dict: dict) -> str:
    return hashlib.sha256(
        json.dumps(state_dict, sort_keys=True).encode()).hexdigest()


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def session_dir(self, session_id: str) -> Path:
        return self.root / session_id

    def exists(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "session.json").exists()

    def list_sessions(self) -> list[str]:
        if not self.root.exists():
            return []
        return sorted(p.name for p in self.root.iterdir()
                      if (p / "session.json").exists())

    # -- validated JSON IO ---------------------------------------------------

    def write_json(self, session_id: str, rel: str, kind: str, data) -> str:
        validate_artifact(kind, data)
        path = self.session_dir(session_id) / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        # atomic replace so concurrent readers never see a partial write
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(canonical_json(data) + "\n")
        os.replace(tmp, path)
        return rel

    def read_json(self, session_id: str, rel: str):
        path = self.session_dir(session_id) / rel
        if not path.exists():
            raise SessionNotFound(f"{session_id}/{rel} not found")
        return json.loads(path.read_text())

    def has(self, session_id: str, rel: str) -> bool:
        return (self.session_dir(session_id) / rel).exists()

    def audit_path(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "audit.jsonl"

    # -- checkpoints ---------------------------------------------------------

    def write_checkpoint(self, session_id: str, state_dict: dict) -> str:
        ckpt_dir = self.session_dir(session_id) / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        seq = len(list(ckpt_dir.glob("*.json"))) + 1
        rel = f"checkpoints/{seq:03d}.json"
        payload = {
            "session_id": session_id,
            "phase": state_dict["phase"],
            "state": state_dict,
            "hash": state_hash(state_dict),
        }
        self.write_json(session_id, rel, "checkpoint", payload)
        return rel

    def latest_checkpoint(self, session_id: str) -> dict:
        ckpt_dir = self.session_dir(session_id) / "checkpoints"
        if not ckpt_dir.exists():
            raise SessionNotFound(f"no checkpoints for session {session_id!r}")
        files = sorted(ckpt_dir.glob("*.json"))
        if not files:
            raise SessionNotFound(f"no checkpoints for session {session_id!r}")
        payload = json.loads(files[-1].read_text())
        if state_hash(payload["state"]) != payload.get("hash"):
            raise CheckpointCorrupt(f"checkpoint {files[-1].name} hash mismatch")
        return payload["state"]
