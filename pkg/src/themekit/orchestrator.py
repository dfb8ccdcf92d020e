"""Workflow state machine with expert checkpoints and resumable persistence."""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum

from . import agents
from .chunking import Chunk, segment
from .domain import (
    Criterion, CriterionFeedback, HistoryEvent, Phase, ProducedBy,
    RefinementAction, SessionState, StopPolicy, StudyConfig, Theme, ThemeSet,
    Transcript, Code, validate_code,
)
from .errors import (
    IllegalPhase, InvalidPayload, IterationCapReached, ValidationFailed,
)
from .gateway import AuditLog, Gateway, ProviderConfig, build_provider
from .store import SessionStore

# Legal forward transitions; AwaitingExpert self-loops on amend/edit decisions.
LEGAL_TRANSITIONS: dict[Phase, set[Phase]] = {
    Phase.CONFIGURED: {Phase.CHUNKED},
    Phase.CHUNKED: {Phase.CODED},
    Phase.CODED: {Phase.THEMES_GENERATED},
    Phase.THEMES_GENERATED: {Phase.EVALUATED},
    Phase.EVALUATED: {Phase.REFINED},
    Phase.REFINED: {Phase.AWAITING_EXPERT},
    Phase.AWAITING_EXPERT: {Phase.EVALUATED, Phase.FINALIZED,
                            Phase.AWAITING_EXPERT},
    Phase.FINALIZED: set(),
}


class SystemClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).isoformat()


class FixedClock:
    """Constant timestamps so artifact trees diff cleanly."""

    def __init__(self, value: str = "1970-01-01T00:00:00+00:00"):
        self.value = value

    def now(self) -> str:
        return self.value


class DecisionKind(str, Enum):
    APPROVE = "approve"
    CONTINUE_REFINEMENT = "continue_refinement"
    AMEND_CRITERIA = "amend_criteria"
    AMEND_GOALS = "amend_goals"
    EDIT_THEMES = "edit_themes"


_PAYLOAD_REQUIRED = {DecisionKind.AMEND_CRITERIA, DecisionKind.AMEND_GOALS,
                     DecisionKind.EDIT_THEMES}


@dataclass(frozen=True)
class ExpertDecision:
    kind: DecisionKind
    payload: object = None
    note: str = ""

    def __post_init__(self):
        if (self.payload is not None) != (self.kind in _PAYLOAD_REQUIRED):
            raise InvalidPayload(
                f"decision {self.kind.value} payload presence is wrong")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "payload": self.payload,
                "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "ExpertDecision":
        return cls(kind=DecisionKind(d["kind"]), payload=d.get("payload"),
                   note=d.get("note", ""))


class Orchestrator:
    """One writer per session: all mutations serialize through a session lock."""

    def __init__(self, root, provider_config: ProviderConfig | None = None,
                 seed: int = 0, clock=None, gateway_factory=None,
                 embed_model: str = "all-MiniLM-L6-v2"):
        self.store = SessionStore(root)
        self.provider_config = provider_config or ProviderConfig()
        self.seed = seed
        self.clock = clock or SystemClock()
        self.embed_model = embed_model
        self._gateway_factory = gateway_factory
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def gateway(self, session_id: str) -> Gateway:
        audit = AuditLog(self.store.audit_path(session_id))
        if self._gateway_factory is not None:
            return self._gateway_factory(audit)
        provider = build_provider(self.provider_config, seed=self.seed,
                                  embed_model=self.embed_model)
        return Gateway(provider, audit=audit, config=self.provider_config,
                       embed_model=self.embed_model, clock=self.clock)

    # -- persistence helpers -------------------------------------------------

    def _save(self, state: SessionState) -> None:
        self.store.write_json(state.session_id, "session.json", "session",
                              state.to_dict())

    def get_session(self, session_id: str) -> SessionState:
        return SessionState.from_dict(
            self.store.read_json(session_id, "session.json"))

    def _advance(self, state: SessionState, phase: Phase, ref: str,
                 note: str = "", **changes) -> SessionState:
        if phase is not state.phase and phase not in LEGAL_TRANSITIONS[state.phase]:
            raise IllegalPhase(
                f"cannot move from {state.phase.value} to {phase.value}")
        if phase is state.phase and state.phase is not Phase.AWAITING_EXPERT:
            raise IllegalPhase(f"cannot self-loop in {state.phase.value}")
        event = HistoryEvent(phase=phase, timestamp=self.clock.now(),
                             ref=ref, note=note)
        state = state.evolve(phase=phase, history=state.history + (event,),
                             **changes)
        self._save(state)
        self.store.write_checkpoint(state.session_id, state.to_dict())
        return state

    # -- session lifecycle ---------------------------------------------------

    def create_session(self, config: StudyConfig,
                       transcripts: list[Transcript],
                       session_id: str | None = None) -> SessionState:
        if not transcripts:
            raise ValidationFailed({"transcripts": "at least one required"})
        ids = [t.id for t in transcripts]
        if len(ids) != len(set(ids)):
            raise ValidationFailed({"transcripts": "ids must be unique"})
        for t in transcripts:
            if not t.turns:
                raise ValidationFailed({"transcripts": f"{t.id} has no turns"})
        sid = session_id or f"s-{uuid.uuid4().hex[:12]}"
        state = SessionState(
            session_id=sid, phase=Phase.CONFIGURED, iteration=0,
            config=config, history=(), transcript_ids=tuple(ids),
        )
        self.store.write_json(sid, "artifacts/transcripts.json", "transcripts",
                              [t.to_dict() for t in transcripts])
        event = HistoryEvent(phase=Phase.CONFIGURED, timestamp=self.clock.now(),
                             ref="artifacts/transcripts.json")
        state = state.evolve(history=(event,))
        self._save(state)
        self.store.write_checkpoint(sid, state.to_dict())
        return state

    def resume(self, session_id: str) -> SessionState:
        state_dict = self.store.latest_checkpoint(session_id)
        return SessionState.from_dict(state_dict)

    # -- artifact loaders ----------------------------------------------------

    def load_transcripts(self, session_id: str) -> list[Transcript]:
        return [Transcript.from_dict(d) for d in
                self.store.read_json(session_id, "artifacts/transcripts.json")]

    def load_chunks(self, session_id: str) -> list[Chunk]:
        return [Chunk.from_dict(d) for d in
                self.store.read_json(session_id, "artifacts/chunks.json")]

    def load_codes(self, session_id: str) -> list[Code]:
        return [Code.from_dict(d) for d in
                self.store.read_json(session_id, "artifacts/codes.json")]

    def load_theme_set(self, session_id: str, version: int) -> ThemeSet:
        return ThemeSet.from_dict(
            self.store.read_json(session_id, f"artifacts/themes/v{version}.json"))

    def load_feedback(self, session_id: str,
                      iteration: int) -> list[CriterionFeedback]:
        return [CriterionFeedback.from_dict(d) for d in
                self.store.read_json(
                    session_id, f"artifacts/feedback/iter{iteration:03d}.json")]

    def current_theme_set(self, session_id: str) -> ThemeSet:
        state = self.get_session(session_id)
        if state.current_theme_version is None:
            raise IllegalPhase("session has no theme set yet")
        return self.load_theme_set(session_id, state.current_theme_version)

    # -- pipeline stages -----------------------------------------------------

    def run_generation(self, session_id: str) -> SessionState:
        with self._lock(session_id):
            state = self.get_session(session_id)
            if state.phase not in (Phase.CONFIGURED, Phase.CHUNKED, Phase.CODED):
                raise IllegalPhase(
                    f"generation cannot run from {state.phase.value}")
            gateway = self.gateway(session_id)

            if state.phase is Phase.CONFIGURED:
                chunks: list[Chunk] = []
                for t in self.load_transcripts(session_id):
                    chunks.extend(segment(t, state.config.chunk_word_limit))
                self.store.write_json(session_id, "artifacts/chunks.json",
                                      "chunks", [c.to_dict() for c in chunks])
                state = self._advance(state, Phase.CHUNKED,
                                      "artifacts/chunks.json")

            if state.phase is Phase.CHUNKED:
                chunks = self.load_chunks(session_id)
                all_codes: list[Code] = []
                for n, chunk in enumerate(chunks):
                    rel = f"artifacts/codes/chunk_{n:04d}.json"
                    if self.store.has(session_id, rel):
                        data = self.store.read_json(session_id, rel)
                        all_codes.extend(Code.from_dict(c)
                                         for c in data["codes"])
                        continue
                    codes = agents.generate_codes(chunk, state.config, gateway)
                    violations = [
                        {"code_id": c.id, "kind": v.kind.value,
                         "measured_words": v.measured_words}
                        for c in codes for v in validate_code(c)
                    ]
                    self.store.write_json(session_id, rel, "chunk_codes", {
                        "transcript_id": chunk.transcript_id,
                        "chunk_index": chunk.index,
                        "codes": [c.to_dict() for c in codes],
                        "soft_violations": violations,
                    })
                    all_codes.extend(codes)
                deduped = agents.dedupe_codes(all_codes, gateway)
                self.store.write_json(session_id, "artifacts/codes.json",
                                      "codes", [c.to_dict() for c in deduped])
                state = self._advance(state, Phase.CODED,
                                      "artifacts/codes.json")

            if state.phase is Phase.CODED:
                codes = self.load_codes(session_id)
                groups = agents.group_codes(codes, state.config, gateway)
                self.store.write_json(session_id, "artifacts/groups.json",
                                      "groups", [g.to_dict() for g in groups])
                theme_set = agents.synthesize_themes(groups, codes,
                                                     state.config, gateway)
                self.store.write_json(session_id, "artifacts/themes/v0.json",
                                      "theme_set", theme_set.to_dict())
                state = self._advance(state, Phase.THEMES_GENERATED,
                                      "artifacts/themes/v0.json",
                                      current_theme_version=0)
            return state

    def run_evaluation_cycle(self, session_id: str) -> SessionState:
        with self._lock(session_id):
            state = self.get_session(session_id)
            if state.phase not in (Phase.THEMES_GENERATED,
                                   Phase.AWAITING_EXPERT, Phase.EVALUATED):
                raise IllegalPhase(
                    f"evaluation cycle cannot run from {state.phase.value}")
            starting_fresh = state.phase is not Phase.EVALUATED
            if (starting_fresh and state.unattended_iterations
                    >= state.config.max_unattended_iterations):
                raise IterationCapReached(
                    f"{state.unattended_iterations} unattended iterations "
                    f"reached the cap; an expert decision is required")
            gateway = self.gateway(session_id)
            codes = self.load_codes(session_id)
            iter_n = state.iteration + 1
            parent = self.load_theme_set(session_id,
                                         state.current_theme_version)

            if starting_fresh:
                feedback = agents.evaluate_themes(
                    parent, codes, list(state.config.criteria),
                    state.config, gateway)
                rel = f"artifacts/feedback/iter{iter_n:03d}.json"
                self.store.write_json(session_id, rel, "feedback",
                                      [f.to_dict() for f in feedback])
                state = self._advance(state, Phase.EVALUATED, rel)
            else:
                feedback = self.load_feedback(session_id, iter_n)

            child, actions = agents.refine_themes(parent, feedback, codes,
                                                  state.config, gateway)
            theme_rel = f"artifacts/themes/v{child.version}.json"
            self.store.write_json(session_id, theme_rel, "theme_set",
                                  child.to_dict())
            self.store.write_json(
                session_id, f"artifacts/actions/iter{iter_n:03d}.json",
                "actions", [a.to_dict() for a in actions])
            state = self._advance(state, Phase.REFINED, theme_rel,
                                  current_theme_version=child.version)

            advisory = ""
            if state.config.stop_policy is StopPolicy.GEVAL_ASSISTED:
                score = agents.geval_score(child, codes, state.config, gateway)
                self.store.write_json(
                    session_id, f"artifacts/geval/iter{iter_n:03d}.json",
                    "geval", score.to_dict())
                threshold = state.config.geval_params.score_threshold
                if score.mean > threshold:
                    advisory = (f"mean score {score.mean:.2f} above "
                                f"{threshold}: stopping suggested "
                                f"(expert confirmation still required)")
                else:
                    advisory = (f"mean score {score.mean:.2f} below "
                                f"{threshold}: refinement suggested")
            state = self._advance(
                state, Phase.AWAITING_EXPERT, theme_rel,
                iteration=iter_n,
                unattended_iterations=state.unattended_iterations + 1,
                last_advisory=advisory)
            return state

    # -- metrics -------------------------------------------------------------

    def compute_metrics(self, session_id: str, reference: ThemeSet,
                        theta: float, basis) -> dict:
        """Score the current theme set against a reference; idempotent per input."""
        import hashlib as _hashlib
        import json as _json

        from . import metrics as _metrics

        state = self.get_session(session_id)
        if state.current_theme_version is None:
            raise IllegalPhase("session has no theme set to score")
        generated = self.load_theme_set(session_id, state.current_theme_version)
        key = _hashlib.sha256(_json.dumps(
            [reference.to_dict(), theta, basis.value,
             state.current_theme_version], sort_keys=True).encode()
        ).hexdigest()[:16]
        rel = f"artifacts/metrics/{key}.json"
        if self.store.has(session_id, rel):
            return self.store.read_json(session_id, rel)
        gateway = self.gateway(session_id)
        matrix = _metrics.build_matrix(reference, generated, basis,
                                       gateway.embed_matrix,
                                       embedding_model=self.embed_model)
        rep = _metrics.report(matrix, theta)
        self.store.write_json(session_id, rel, "metrics_report", rep.to_dict())
        return self.store.read_json(session_id, rel)

    # -- expert decisions ----------------------------------------------------

    def apply_expert_decision(self, session_id: str,
                              decision: ExpertDecision) -> SessionState:
        with self._lock(session_id):
            state = self.get_session(session_id)
            if state.phase is not Phase.AWAITING_EXPERT:
                raise IllegalPhase(
                    f"decisions require awaiting_expert, not {state.phase.value}")
            seq = len(state.history) + 1
            rel = f"artifacts/decisions/{seq:03d}.json"
            self.store.write_json(session_id, rel, "decision",
                                  decision.to_dict())

            if decision.kind is DecisionKind.APPROVE:
                return self._advance(state, Phase.FINALIZED, rel,
                                     note=decision.note)

            if decision.kind is DecisionKind.CONTINUE_REFINEMENT:
                return self._advance(state, Phase.AWAITING_EXPERT, rel,
                                     note=decision.note,
                                     unattended_iterations=0)

            if decision.kind is DecisionKind.AMEND_CRITERIA:
                payload = decision.payload
                if not isinstance(payload, list) or len(payload) != 4:
                    raise InvalidPayload("amend_criteria requires exactly "
                                         "four criteria")
                try:
                    criteria = tuple(Criterion.from_dict(c) for c in payload)
                    config = StudyConfig.from_dict(
                        {**state.config.to_dict(),
                         "criteria": [c.to_dict() for c in criteria]})
                except (ValidationFailed, KeyError, ValueError) as e:
                    raise InvalidPayload(f"invalid criteria payload: {e}") from e
                return self._advance(state, Phase.AWAITING_EXPERT, rel,
                                     note=decision.note, config=config)

            if decision.kind is DecisionKind.AMEND_GOALS:
                if not isinstance(decision.payload, str) or not decision.payload.strip():
                    raise InvalidPayload("amend_goals requires a goals string")
                config = StudyConfig.from_dict(
                    {**state.config.to_dict(), "goals": decision.payload})
                return self._advance(state, Phase.AWAITING_EXPERT, rel,
                                     note=decision.note, config=config)

            # edit_themes
            payload = decision.payload
            if not isinstance(payload, dict) or "themes" not in payload:
                raise InvalidPayload("edit_themes requires a themes payload")
            known = {c.id for c in self.load_codes(session_id)}
            try:
                themes = tuple(Theme.from_dict(t) for t in payload["themes"])
            except (ValidationFailed, KeyError, TypeError) as e:
                raise InvalidPayload(f"invalid themes payload: {e}") from e
            unknown = [cid for t in themes for cid in t.supporting_code_ids
                       if cid not in known]
            if unknown:
                raise InvalidPayload(
                    f"unknown code references: {sorted(set(unknown))}")
            edited = ThemeSet(
                version=state.current_theme_version + 1,
                themes=themes, produced_by=ProducedBy.HUMAN,
                parent_version=state.current_theme_version)
            theme_rel = f"artifacts/themes/v{edited.version}.json"
            self.store.write_json(session_id, theme_rel, "theme_set",
                                  edited.to_dict())
            return self._advance(state, Phase.AWAITING_EXPERT, rel,
                                 note=decision.note,
                                 current_theme_version=edited.version)
