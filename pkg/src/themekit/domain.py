"""Shared domain types, validation rules and canonical JSON serialization.

All types here are immutable values: mutation happens only by producing
new instances (e.g. a new ThemeSet version).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources

from .errors import EmptyText, ValidationFailed

__all__ = [
    "Speaker", "Turn", "Transcript",
    "Code", "CodeGroup", "Theme", "ThemeSet", "ProducedBy",
    "CriterionKind", "ActionKind", "CRITERION_ACTION",
    "Criterion", "Issue", "CriterionFeedback", "RefinementAction",
    "Phase", "HistoryEvent", "SessionState", "StudyConfig",
    "ModelParams", "GEvalParams", "StopPolicy",
    "SoftViolation", "ViolationKind",
    "word_count", "first_sentence", "validate_code", "default_criteria",
]


# ---------------------------------------------------------------------------
# word counting

def word_count(text: str) -> int:
    """Count words by whitespace tokenization, dropping punctuation-only tokens."""
    return sum(1 for tok in text.split() if any(c.isalnum() for c in tok))


# ---------------------------------------------------------------------------
# sentence extraction

def _load_abbreviations() -> frozenset[str]:
    raw = resources.files("themekit.data").joinpath("abbreviations.txt").read_text()
    return frozenset(
        line.strip().lower() for line in raw.splitlines()
        if line.strip() and not line.startswith("#")
    )


_ABBREVIATIONS = _load_abbreviations()
_TERMINATORS = ".!?"


def first_sentence(text: str) -> str:
    """Prefix up to and including the first sentence terminator.

    A '.' inside a decimal number or ending a known abbreviation does not
    terminate. Returns the whole text when no terminator is found.
    """
    if not text.strip():
        raise EmptyText("cannot extract a sentence from empty text")
    n = len(text)
    for i, ch in enumerate(text):
        if ch not in _TERMINATORS:
            continue
        if ch == ".":
            # decimal guard: digit on both sides
            if 0 < i < n - 1 and text[i - 1].isdigit() and text[i + 1].isdigit():
                continue
            # abbreviation guard: the whitespace-delimited token containing
            # this period (covers multi-period forms like "e.g.")
            start, end = i, i + 1
            while start > 0 and not text[start - 1].isspace():
                start -= 1
            while end < n and not text[end].isspace():
                end += 1
            if text[start:end].lower() in _ABBREVIATIONS:
                continue
        return text[:i + 1].strip()
    return text.strip()


# ---------------------------------------------------------------------------
# transcripts

class Speaker(str, Enum):
    INTERVIEWER = "interviewer"
    PARTICIPANT = "participant"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Turn:
    speaker: Speaker
    text: str

    def __post_init__(self):
        if word_count(self.text) < 1:
            raise ValidationFailed({"text": "turn text must contain at least one word"})

    def to_dict(self) -> dict:
        return {"speaker": self.speaker.value, "text": self.text}

    @classmethod
    def from_dict(cls, d: dict) -> "Turn":
        return cls(speaker=Speaker(d["speaker"]), text=d["text"])


@dataclass(frozen=True)
class Transcript:
    id: str
    title: str
    turns: tuple[Turn, ...]

    def __post_init__(self):
        if not self.id:
            raise ValidationFailed({"id": "transcript id must be non-empty"})
        object.__setattr__(self, "turns", tuple(self.turns))

    @property
    def word_count(self) -> int:
        return sum(word_count(t.text) for t in self.turns)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "turns": [t.to_dict() for t in self.turns],
            "word_count": self.word_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        return cls(
            id=d["id"], title=d.get("title", ""),
            turns=tuple(Turn.from_dict(t) for t in d["turns"]),
        )


# ---------------------------------------------------------------------------
# codes

class ViolationKind(str, Enum):
    NAME_TOO_SHORT = "NameTooShort"
    NAME_TOO_LONG = "NameTooLong"
    DESCRIPTION_LENGTH_OFF = "DescriptionLengthOff"
    QUOTES_LENGTH_OFF = "QuotesLengthOff"


@dataclass(frozen=True)
class SoftViolation:
    kind: ViolationKind
    measured_words: int

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "measured_words": self.measured_words}


@dataclass(frozen=True)
class Code:
    id: str
    name: str
    description: str
    quotes: str
    chunk_refs: tuple[tuple[str, int], ...]

    def __post_init__(self):
        problems = {}
        if not self.id:
            problems["id"] = "must be non-empty"
        for f in ("name", "description", "quotes"):
            if not getattr(self, f).strip():
                problems[f] = "must be non-empty"
        if not self.chunk_refs:
            problems["chunk_refs"] = "must be non-empty"
        if problems:
            raise ValidationFailed(problems)
        object.__setattr__(
            self, "chunk_refs", tuple((str(t), int(i)) for t, i in self.chunk_refs)
        )

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "description": self.description,
            "quotes": self.quotes,
            "chunk_refs": [[t, i] for t, i in self.chunk_refs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Code":
        return cls(
            id=d["id"], name=d["name"], description=d["description"],
            quotes=d["quotes"],
            chunk_refs=tuple((r[0], r[1]) for r in d["chunk_refs"]),
        )


# Advisory word-count targets; drift is flagged, never rejected.
NAME_MIN_WORDS = 8
NAME_MAX_WORDS = 15
DESCRIPTION_TARGET = 80
DESCRIPTION_TOLERANCE = 40
QUOTES_TARGET = 120
QUOTES_TOLERANCE = 60


def validate_code(code: Code) -> list[SoftViolation]:
    """Advisory length checks against the prompt's word targets. Never rejects."""
    out: list[SoftViolation] = []
    n = word_count(code.name)
    if n < NAME_MIN_WORDS:
        out.append(SoftViolation(ViolationKind.NAME_TOO_SHORT, n))
    elif n > NAME_MAX_WORDS:
        out.append(SoftViolation(ViolationKind.NAME_TOO_LONG, n))
    d = word_count(code.description)
    if abs(d - DESCRIPTION_TARGET) > DESCRIPTION_TOLERANCE:
        out.append(SoftViolation(ViolationKind.DESCRIPTION_LENGTH_OFF, d))
    q = word_count(code.quotes)
    if abs(q - QUOTES_TARGET) > QUOTES_TOLERANCE:
        out.append(SoftViolation(ViolationKind.QUOTES_LENGTH_OFF, q))
    return out


@dataclass(frozen=True)
class CodeGroup:
    label: str
    code_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.label.strip():
            raise ValidationFailed({"label": "must be non-empty"})
        if not self.code_ids:
            raise ValidationFailed({"code_ids": "must be non-empty"})
        object.__setattr__(self, "code_ids", tuple(self.code_ids))

    def to_dict(self) -> dict:
        return {"label": self.label, "code_ids": list(self.code_ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "CodeGroup":
        return cls(label=d["label"], code_ids=tuple(d["code_ids"]))


# ---------------------------------------------------------------------------
# themes

class ProducedBy(str, Enum):
    GENERATION = "generation"
    REFINEMENT = "refinement"
    HUMAN = "human"


@dataclass(frozen=True)
class Theme:
    id: str
    name: str
    description: str
    supporting_code_ids: tuple[str, ...] = ()

    def __post_init__(self):
        problems = {}
        if not self.id:
            problems["id"] = "must be non-empty"
        if not self.name.strip():
            problems["name"] = "must be non-empty"
        if not self.description.strip():
            problems["description"] = "must be non-empty"
        if problems:
            raise ValidationFailed(problems)
        object.__setattr__(self, "supporting_code_ids", tuple(self.supporting_code_ids))

    @property
    def first_sentence(self) -> str:
        return first_sentence(self.description)

    def to_dict(self) -> dict:
        return {
            "id": self.id, "name": self.name, "description": self.description,
            "supporting_code_ids": list(self.supporting_code_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Theme":
        return cls(
            id=d["id"], name=d["name"], description=d["description"],
            supporting_code_ids=tuple(d.get("supporting_code_ids", ())),
        )


@dataclass(frozen=True)
class ThemeSet:
    version: int
    themes: tuple[Theme, ...]
    produced_by: ProducedBy
    parent_version: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "themes", tuple(self.themes))
        problems = {}
        if self.version < 0:
            problems["version"] = "must be non-negative"
        ids = [t.id for t in self.themes]
        if len(ids) != len(set(ids)):
            problems["themes"] = "theme ids must be unique within the set"
        if self.produced_by is ProducedBy.REFINEMENT:
            if self.version < 1:
                problems["version"] = "refinement sets start at version 1"
            if self.parent_version is None:
                problems["parent_version"] = "refinement sets require a parent"
        if self.parent_version is not None and self.parent_version >= self.version:
            problems["parent_version"] = "version must strictly increase along the chain"
        if problems:
            raise ValidationFailed(problems)

    def theme_ids(self) -> set[str]:
        return {t.id for t in self.themes}

    def get(self, theme_id: str) -> Theme:
        for t in self.themes:
            if t.id == theme_id:
                return t
        raise KeyError(theme_id)

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "themes": [t.to_dict() for t in self.themes],
            "produced_by": self.produced_by.value,
            "parent_version": self.parent_version,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ThemeSet":
        return cls(
            version=d["version"],
            themes=tuple(Theme.from_dict(t) for t in d["themes"]),
            produced_by=ProducedBy(d["produced_by"]),
            parent_version=d.get("parent_version"),
        )


# ---------------------------------------------------------------------------
# criteria and feedback

class CriterionKind(str, Enum):
    COVERAGE = "coverage"
    ACTIONABILITY = "actionability"
    DISTINCTIVENESS = "distinctiveness"
    RELEVANCE = "relevance"


class ActionKind(str, Enum):
    ADD = "add"
    SPLIT = "split"
    COMBINE = "combine"
    DELETE = "delete"


# Fixed total mapping from evaluation criterion to refinement action.
CRITERION_ACTION: dict[CriterionKind, ActionKind] = {
    CriterionKind.COVERAGE: ActionKind.ADD,
    CriterionKind.ACTIONABILITY: ActionKind.SPLIT,
    CriterionKind.DISTINCTIVENESS: ActionKind.COMBINE,
    CriterionKind.RELEVANCE: ActionKind.DELETE,
}


@dataclass(frozen=True)
class Criterion:
    kind: CriterionKind
    description: str
    expert_examples: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.description.strip():
            raise ValidationFailed({"description": "must be non-empty"})
        object.__setattr__(self, "expert_examples", tuple(self.expert_examples))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value, "description": self.description,
            "expert_examples": list(self.expert_examples),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Criterion":
        return cls(
            kind=CriterionKind(d["kind"]), description=d["description"],
            expert_examples=tuple(d.get("expert_examples", ())),
        )


@dataclass(frozen=True)
class Issue:
    text: str
    theme_ids: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "theme_ids", tuple(self.theme_ids))

    def to_dict(self) -> dict:
        return {"text": self.text, "theme_ids": list(self.theme_ids)}

    @classmethod
    def from_dict(cls, d: dict) -> "Issue":
        return cls(text=d["text"], theme_ids=tuple(d.get("theme_ids", ())))


@dataclass(frozen=True)
class CriterionFeedback:
    criterion: CriterionKind
    issues: tuple[Issue, ...]

    def __post_init__(self):
        object.__setattr__(self, "issues", tuple(self.issues))

    @property
    def suggested_action_kind(self) -> ActionKind:
        return CRITERION_ACTION[self.criterion]

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "issues": [i.to_dict() for i in self.issues],
            "suggested_action_kind": self.suggested_action_kind.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CriterionFeedback":
        return cls(
            criterion=CriterionKind(d["criterion"]),
            issues=tuple(Issue.from_dict(i) for i in d.get("issues", ())),
        )


@dataclass(frozen=True)
class RefinementAction:
    kind: ActionKind
    source_theme_ids: tuple[str, ...]
    result_theme_ids: tuple[str, ...]
    rationale: str = ""

    def __post_init__(self):
        object.__setattr__(self, "source_theme_ids", tuple(self.source_theme_ids))
        object.__setattr__(self, "result_theme_ids", tuple(self.result_theme_ids))
        ns, nr = len(self.source_theme_ids), len(self.result_theme_ids)
        ok = {
            ActionKind.ADD: ns == 0 and nr >= 1,
            ActionKind.SPLIT: ns == 1 and nr >= 2,
            ActionKind.COMBINE: ns >= 2 and nr == 1,
            ActionKind.DELETE: ns == 1 and nr == 0,
        }[self.kind]
        if not ok:
            raise ValidationFailed({
                "cardinality": f"{self.kind.value} cannot take "
                               f"{ns} sources and {nr} results"
            })

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "source_theme_ids": list(self.source_theme_ids),
            "result_theme_ids": list(self.result_theme_ids),
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RefinementAction":
        return cls(
            kind=ActionKind(d["kind"]),
            source_theme_ids=tuple(d.get("source_theme_ids", ())),
            result_theme_ids=tuple(d.get("result_theme_ids", ())),
            rationale=d.get("rationale", ""),
        )


# ---------------------------------------------------------------------------
# study configuration

class StopPolicy(str, Enum):
    EXPERT_ONLY = "expert_only"
    GEVAL_ASSISTED = "geval_assisted"


@dataclass(frozen=True)
class ModelParams:
    model: str = "gpt-4o"
    temperature: float = 0.0

    def to_dict(self) -> dict:
        return {"model": self.model, "temperature": self.temperature}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(model=d.get("model", "gpt-4o"),
                   temperature=d.get("temperature", 0.0))


@dataclass(frozen=True)
class GEvalParams:
    score_threshold: float = 4.5
    runs: int = 10

    def to_dict(self) -> dict:
        return {"score_threshold": self.score_threshold, "runs": self.runs}

    @classmethod
    def from_dict(cls, d: dict) -> "GEvalParams":
        return cls(score_threshold=d.get("score_threshold", 4.5),
                   runs=d.get("runs", 10))


def default_criteria() -> tuple[Criterion, ...]:
    """The four expert-authored default criteria shipped with the engine."""
    import json
    raw = resources.files("themekit.data").joinpath("default_criteria.json").read_text()
    return tuple(Criterion.from_dict(c) for c in json.loads(raw))


@dataclass(frozen=True)
class StudyConfig:
    background: str
    goals: str
    criteria: tuple[Criterion, ...] = field(default_factory=default_criteria)
    chunk_word_limit: int = 1500
    similarity_threshold: float = 0.60
    model_params: ModelParams = field(default_factory=ModelParams)
    stop_policy: StopPolicy = StopPolicy.EXPERT_ONLY
    geval_params: GEvalParams = field(default_factory=GEvalParams)
    max_unattended_iterations: int = 5

    def __post_init__(self):
        object.__setattr__(self, "criteria", tuple(self.criteria))
        problems = {}
        if not (0.0 < self.similarity_threshold < 1.0):
            problems["similarity_threshold"] = "must be in the open interval (0, 1)"
        if self.chunk_word_limit < 100:
            problems["chunk_word_limit"] = "must be at least 100"
        kinds = sorted(c.kind.value for c in self.criteria)
        if kinds != sorted(k.value for k in CriterionKind):
            problems["criteria"] = "must contain each of the four kinds exactly once"
        if self.model_params.temperature < 0:
            problems["model_params"] = "temperature must be non-negative"
        if self.geval_params.runs < 1:
            problems["geval_params"] = "runs must be positive"
        if self.max_unattended_iterations < 1:
            problems["max_unattended_iterations"] = "must be positive"
        if problems:
            raise ValidationFailed(problems)

    def criterion(self, kind: CriterionKind) -> Criterion:
        for c in self.criteria:
            if c.kind is kind:
                return c
        raise KeyError(kind)

    def to_dict(self) -> dict:
        return {
            "background": self.background,
            "goals": self.goals,
            "criteria": [c.to_dict() for c in self.criteria],
            "chunk_word_limit": self.chunk_word_limit,
            "similarity_threshold": self.similarity_threshold,
            "model_params": self.model_params.to_dict(),
            "stop_policy": self.stop_policy.value,
            "geval_params": self.geval_params.to_dict(),
            "max_unattended_iterations": self.max_unattended_iterations,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        kwargs = dict(
            background=d.get("background", ""),
            goals=d.get("goals", ""),
            chunk_word_limit=d.get("chunk_word_limit", 1500),
            similarity_threshold=d.get("similarity_threshold", 0.60),
            model_params=ModelParams.from_dict(d.get("model_params", {})),
            stop_policy=StopPolicy(d.get("stop_policy", "expert_only")),
            geval_params=GEvalParams.from_dict(d.get("geval_params", {})),
            max_unattended_iterations=d.get("max_unattended_iterations", 5),
        )
        if "criteria" in d:
            kwargs["criteria"] = tuple(Criterion.from_dict(c) for c in d["criteria"])
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# session state

class Phase(str, Enum):
    CONFIGURED = "configured"
    CHUNKED = "chunked"
    CODED = "coded"
    THEMES_GENERATED = "themes_generated"
    EVALUATED = "evaluated"
    REFINED = "refined"
    AWAITING_EXPERT = "awaiting_expert"
    FINALIZED = "finalized"


@dataclass(frozen=True)
class HistoryEvent:
    phase: Phase
    timestamp: str
    ref: str
    note: str = ""

    def to_dict(self) -> dict:
        return {"phase": self.phase.value, "timestamp": self.timestamp,
                "ref": self.ref, "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "HistoryEvent":
        return cls(phase=Phase(d["phase"]), timestamp=d["timestamp"],
                   ref=d["ref"], note=d.get("note", ""))


@dataclass(frozen=True)
class SessionState:
    session_id: str
    phase: Phase
    iteration: int
    config: StudyConfig
    history: tuple[HistoryEvent, ...]
    transcript_ids: tuple[str, ...]
    current_theme_version: int | None = None
    unattended_iterations: int = 0
    last_advisory: str = ""

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(self.history))
        object.__setattr__(self, "transcript_ids", tuple(self.transcript_ids))
        if self.iteration < 0:
            raise ValidationFailed({"iteration": "must be non-negative"})

    def evolve(self, **changes) -> "SessionState":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "phase": self.phase.value,
            "iteration": self.iteration,
            "config": self.config.to_dict(),
            "history": [h.to_dict() for h in self.history],
            "transcript_ids": list(self.transcript_ids),
            "current_theme_version": self.current_theme_version,
            "unattended_iterations": self.unattended_iterations,
            "last_advisory": self.last_advisory,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionState":
        return cls(
            session_id=d["session_id"],
            phase=Phase(d["phase"]),
            iteration=d["iteration"],
            config=StudyConfig.from_dict(d["config"]),
            history=tuple(HistoryEvent.from_dict(h) for h in d.get("history", ())),
            transcript_ids=tuple(d.get("transcript_ids", ())),
            current_theme_version=d.get("current_theme_version"),
            unattended_iterations=d.get("unattended_iterations", 0),
            last_advisory=d.get("last_advisory", ""),
        )
