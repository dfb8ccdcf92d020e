"""The three agent roles over the gateway: generation, evaluation, refinement.

Prompt bodies live as plain-text files under prompts/ with a manifest, so
domain experts can edit wording without code changes. Every agent output is
schema-constrained JSON parsed through the gateway's structured call.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .chunking import Chunk
from .domain import (
    ActionKind, Code, CodeGroup, Criterion, CriterionFeedback, CriterionKind,
    Issue, ProducedBy, RefinementAction, StudyConfig, Theme, ThemeSet,
)
from .errors import (
    ActionReplayMismatch, OutOfRangeScore, PartitionViolation,
    SchemaViolationAfterRepair, UnknownCodeReference, UnknownThemeReference,
    ValidationFailed,
)
from .gateway import ChatRequest, Gateway, ResponseFormat

log = logging.getLogger(__name__)

DEDUPE_COSINE_THRESHOLD = 0.90

CRITERION_ORDER = (
    CriterionKind.COVERAGE,
    CriterionKind.ACTIONABILITY,
    CriterionKind.DISTINCTIVENESS,
    CriterionKind.RELEVANCE,
)


# ---------------------------------------------------------------------------
# prompt templates

_PLACEHOLDER_RE = re.compile(
    r"\{(background|goals|chunk_text|codes_json|themes_json|criteria_json|"
    r"feedback_json|expert_examples)\}"
)


class TemplateRenderError(ValueError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    required_placeholders: tuple[str, ...]

    def render(self, **values: str) -> str:
        missing = [p for p in self.required_placeholders if p not in values]
        if missing:
            raise TemplateRenderError(
                f"template {self.id!r} missing placeholders: {missing}")
        out = self.body
        for key, val in values.items():
            out = out.replace("{" + key + "}", val)
        leftover = [m for m in _PLACEHOLDER_RE.findall(out)
                    if m in self.required_placeholders]
        if leftover:
            raise TemplateRenderError(
                f"template {self.id!r} left placeholders unfilled: {leftover}")
        return out


def load_templates() -> dict[str, PromptTemplate]:
    root = resources.files("themekit.prompts")
    manifest = json.loads(root.joinpath("manifest.json").read_text())
    out = {}
    for tid, meta in manifest["templates"].items():
        out[tid] = PromptTemplate(
            id=tid,
            body=root.joinpath(meta["file"]).read_text(),
            required_placeholders=tuple(meta["required_placeholders"]),
        )
    return out


_TEMPLATES = load_templates()


def _request(config: StudyConfig, system: str, prompt: str) -> ChatRequest:
    return ChatRequest(
        model=config.model_params.model,
        messages=(("system", system), ("user", prompt)),
        temperature=config.model_params.temperature,
        response_format=ResponseFormat.JSON_OBJECT,
    )


def _checked_call(gateway: Gateway, request: ChatRequest, schema_id: str,
                  check, error_cls):
    """Structured call plus one semantic repair turn; raises error_cls after."""
    value = gateway.structured_call(request, schema_id)
    err = check(value)
    if err is None:
        return value
    repair = request.with_turns(
        ("assistant", json.dumps(value)),
        ("user", f"Your previous response was rejected: {err}. "
                 f"Reply again with a corrected JSON object for "
                 f'schema "{schema_id}".'),
    )
    value = gateway.structured_call(repair, schema_id)
    err = check(value)
    if err is not None:
        raise error_cls(err)
    return value


# ---------------------------------------------------------------------------
# generation

def generate_codes(chunk: Chunk, config: StudyConfig, gateway: Gateway) -> list[Code]:
    prompt = _TEMPLATES["code_generation"].render(
        background=config.background,
        goals=config.goals,
        chunk_text=chunk.text,
    )
    req = _request(config, "You are the theme generation agent performing "
                           "inductive coding of an interview transcript.", prompt)
    value = gateway.structured_call(req, "code_list")
    codes = []
    for i, c in enumerate(value["codes"]):
        codes.append(Code(
            id=f"{chunk.transcript_id}.{chunk.index}.c{i}",
            name=c["name"], description=c["description"], quotes=c["quotes"],
            chunk_refs=((chunk.transcript_id, chunk.index),),
        ))
    if not codes:
        log.info("sparse chunk: no codes for %s[%d]",
                 chunk.transcript_id, chunk.index)
    return codes


def dedupe_codes(codes: list[Code], gateway: Gateway) -> list[Code]:
    """Merge codes whose names embed within cosine 0.90 of each other."""
    if not codes:
        return []
    vecs = gateway.embed_matrix([c.name for c in codes])
    n = len(codes)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    sims = vecs @ vecs.T
    for i in range(n):
        for j in range(i + 1, n):
            if sims[i, j] >= DEDUPE_COSINE_THRESHOLD:
                parent[find(j)] = find(i)
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    out = []
    for root in sorted(clusters, key=lambda r: min(clusters[r])):
        members = [codes[i] for i in sorted(clusters[root])]
        if len(members) == 1:
            out.append(members[0])
            continue
        refs: list[tuple[str, int]] = []
        for m in members:
            for r in m.chunk_refs:
                if r not in refs:
                    refs.append(r)
        merged = Code(
            id=members[0].id,
            name=members[0].name,
            description=max((m.description for m in members), key=len),
            quotes="\n".join(m.quotes for m in members),
            chunk_refs=tuple(refs),
        )
        log.info("merged duplicate codes %s into %s",
                 [m.id for m in members[1:]], merged.id)
        out.append(merged)
    return out


def group_codes(codes: list[Code], config: StudyConfig,
                gateway: Gateway) -> list[CodeGroup]:
    if not codes:
        raise ValidationFailed({"codes": "must be non-empty"})
    if len(codes) == 1:
        # forced partition, no call needed
        return [CodeGroup(label=codes[0].name, code_ids=(codes[0].id,))]
    payload = json.dumps(
        [{"id": c.id, "name": c.name, "description": c.description}
         for c in codes], indent=1)
    prompt = _TEMPLATES["code_grouping"].render(codes_json=payload)
    req = _request(config, "You are the theme generation agent grouping "
                           "related codes.", prompt)
    wanted = {c.id for c in codes}

    def check(value):
        seen: list[str] = []
        for g in value["groups"]:
            seen.extend(g["code_ids"])
        if sorted(seen) != sorted(wanted):
            missing = wanted - set(seen)
            extra = [s for s in seen if s not in wanted]
            dupes = {s for s in seen if seen.count(s) > 1}
            return (f"code ids must form a partition (missing={sorted(missing)}, "
                    f"unknown={sorted(set(extra))}, duplicated={sorted(dupes)})")
        return None

    value = _checked_call(gateway, req, "code_grouping", check, PartitionViolation)
    return [CodeGroup(label=g["label"], code_ids=tuple(g["code_ids"]))
            for g in value["groups"]]


def synthesize_themes(groups: list[CodeGroup], codes: list[Code],
                      config: StudyConfig, gateway: Gateway) -> ThemeSet:
    """Two stages: per-group preliminary themes, then one consolidation call."""
    by_id = {c.id: c for c in codes}

    def check_refs(value):
        unknown = [cid for t in value["themes"]
                   for cid in t.get("supporting_code_ids", ())
                   if cid not in by_id]
        if unknown:
            return f"unknown code ids referenced: {sorted(set(unknown))}"
        return None

    preliminary = []
    for group in groups:
        payload = json.dumps({
            "label": group.label,
            "codes": [{"id": cid, "name": by_id[cid].name,
                       "description": by_id[cid].description}
                      for cid in group.code_ids],
        }, indent=1)
        prompt = _TEMPLATES["preliminary_themes"].render(codes_json=payload)
        req = _request(config, "You are the theme generation agent proposing "
                               "preliminary themes.", prompt)
        value = _checked_call(gateway, req, "preliminary_themes",
                              check_refs, UnknownCodeReference)
        preliminary.extend(value["themes"])

    payload = json.dumps({"preliminary": preliminary}, indent=1)
    prompt = _TEMPLATES["theme_consolidation"].render(themes_json=payload)
    req = _request(config, "You are the theme generation agent consolidating "
                           "preliminary themes.", prompt)
    value = _checked_call(gateway, req, "theme_consolidation",
                          check_refs, UnknownCodeReference)
    themes = tuple(
        Theme(id=f"t{i + 1}", name=t["name"], description=t["description"],
              supporting_code_ids=tuple(t.get("supporting_code_ids", ())))
        for i, t in enumerate(value["themes"])
    )
    return ThemeSet(version=0, themes=themes, produced_by=ProducedBy.GENERATION)


# ---------------------------------------------------------------------------
# evaluation

def evaluate_themes(theme_set: ThemeSet, codes: list[Code],
                    criteria: list[Criterion], config: StudyConfig,
                    gateway: Gateway) -> list[CriterionFeedback]:
    if not theme_set.themes:
        raise ValidationFailed({"theme_set": "must be non-empty"})
    by_kind = {c.kind: c for c in criteria}
    if set(by_kind) != set(CriterionKind):
        raise ValidationFailed({"criteria": "all four kinds required"})
    known = theme_set.theme_ids()
    themes_payload = json.dumps(
        {"themes": [t.to_dict() for t in theme_set.themes]}, indent=1)

    def check(value):
        unknown = [tid for i in value["issues"]
                   for tid in i.get("theme_ids", ()) if tid not in known]
        if unknown:
            return f"unknown theme ids referenced: {sorted(set(unknown))}"
        return None

    out = []
    for kind in CRITERION_ORDER:
        criterion = by_kind[kind]
        prompt = _TEMPLATES["evaluation"].render(
            criteria_json=json.dumps(criterion.to_dict(), indent=1),
            expert_examples="\n".join(criterion.expert_examples) or "(none)",
            themes_json=themes_payload,
        )
        req = _request(config, "You are the evaluation agent assessing themes "
                               "against one criterion.", prompt)
        value = _checked_call(gateway, req, "criterion_feedback",
                              check, UnknownThemeReference)
        out.append(CriterionFeedback(
            criterion=kind,
            issues=tuple(Issue(text=i["text"],
                               theme_ids=tuple(i.get("theme_ids", ())))
                         for i in value["issues"]),
        ))
    return out


# ---------------------------------------------------------------------------
# refinement

class ReplayError(ValueError):
    pass


def apply_actions(parent: ThemeSet, actions: list[RefinementAction],
                  result_themes: dict[str, Theme]) -> list[Theme]:
    """Mechanically apply actions to the parent set; the replay oracle.

    result_themes supplies the content of every theme id produced by an
    action (Add/Split results, Combine results).
    """
    current: list[Theme] = list(parent.themes)

    def index_of(tid):
        for i, t in enumerate(current):
            if t.id == tid:
                return i
        raise ReplayError(f"action references theme {tid!r} not in current set")

    def resolve(tid):
        if tid not in result_themes:
            raise ReplayError(f"result theme {tid!r} has no stated content")
        return result_themes[tid]

    for a in actions:
        if a.kind is ActionKind.DELETE:
            current.pop(index_of(a.source_theme_ids[0]))
        elif a.kind is ActionKind.ADD:
            for tid in a.result_theme_ids:
                if any(t.id == tid for t in current):
                    raise ReplayError(f"add would duplicate theme {tid!r}")
                current.append(resolve(tid))
        elif a.kind is ActionKind.SPLIT:
            i = index_of(a.source_theme_ids[0])
            current[i:i + 1] = [resolve(tid) for tid in a.result_theme_ids]
        elif a.kind is ActionKind.COMBINE:
            positions = sorted(index_of(tid) for tid in a.source_theme_ids)
            first = positions[0]
            for p in reversed(positions):
                current.pop(p)
            current.insert(first, resolve(a.result_theme_ids[0]))
    return current


def refine_themes(theme_set: ThemeSet, feedback: list[CriterionFeedback],
                  codes: list[Code], config: StudyConfig,
                  gateway: Gateway) -> tuple[ThemeSet, list[RefinementAction]]:
    if len(feedback) != 4:
        raise ValidationFailed({"feedback": "all four criterion feedbacks required"})
    known_codes = {c.id for c in codes}
    themes_payload = json.dumps(
        {"themes": [t.to_dict() for t in theme_set.themes]}, indent=1)
    prompt = _TEMPLATES["refinement"].render(
        themes_json=themes_payload,
        feedback_json=json.dumps([f.to_dict() for f in feedback], indent=1),
    )
    req = _request(config, "You are the refinement agent improving themes "
                           "based on evaluation feedback.", prompt)

    def check(value):
        try:
            actions = [RefinementAction.from_dict(a) for a in value["actions"]]
            child = [Theme.from_dict(t) for t in value["themes"]]
        except (ValidationFailed, KeyError) as e:
            return f"malformed plan: {e}"
        unknown = [cid for t in child for cid in t.supporting_code_ids
                   if cid not in known_codes]
        if unknown:
            return f"unknown code ids referenced: {sorted(set(unknown))}"
        child_by_id = {t.id: t for t in child}
        if len(child_by_id) != len(child):
            return "duplicate theme ids in refined list"
        try:
            replayed = apply_actions(theme_set, actions, child_by_id)
        except ReplayError as e:
            return f"action replay failed: {e}"
        if {t.id: t for t in replayed} != child_by_id:
            return ("applying the stated actions to the current themes does "
                    "not reproduce the stated refined list")
        return None

    value = _checked_call(gateway, req, "refinement_plan",
                          check, ActionReplayMismatch)
    actions = [RefinementAction.from_dict(a) for a in value["actions"]]
    child = ThemeSet(
        version=theme_set.version + 1,
        themes=tuple(Theme.from_dict(t) for t in value["themes"]),
        produced_by=ProducedBy.REFINEMENT,
        parent_version=theme_set.version,
    )
    return child, actions


# ---------------------------------------------------------------------------
# LLM-as-judge advisory scoring

@dataclass(frozen=True)
class GEvalScore:
    per_run_scores: tuple[int, ...]
    runs: int

    def __post_init__(self):
        object.__setattr__(self, "per_run_scores", tuple(self.per_run_scores))
        if len(self.per_run_scores) != self.runs:
            raise ValidationFailed({"per_run_scores": "must match runs"})

    @property
    def mean(self) -> float:
        return sum(self.per_run_scores) / self.runs

    def to_dict(self) -> dict:
        return {"per_run_scores": list(self.per_run_scores),
                "runs": self.runs, "mean": self.mean}


def geval_score(theme_set: ThemeSet, codes: list[Code], config: StudyConfig,
                gateway: Gateway) -> GEvalScore:
    themes_payload = json.dumps(
        {"themes": [t.to_dict() for t in theme_set.themes]}, indent=1)
    prompt = _TEMPLATES["geval"].render(themes_json=themes_payload)
    scores = []
    for run in range(config.geval_params.runs):
        req = ChatRequest(
            model=config.model_params.model,
            messages=(("system", "You are an evaluation agent scoring theme "
                                 "quality."),
                      ("user", prompt),
                      ("user", f"(scoring run {run + 1})")),
            temperature=config.model_params.temperature,
            response_format=ResponseFormat.JSON_OBJECT,
        )
        try:
            value = gateway.structured_call(req, "geval_score")
        except SchemaViolationAfterRepair as e:
            if _looks_out_of_range(e.attempts):
                raise OutOfRangeScore(
                    f"score outside [1,5] after repair (run {run + 1})") from e
            raise
        scores.append(int(value["score"]))
    return GEvalScore(per_run_scores=tuple(scores), runs=config.geval_params.runs)


def _looks_out_of_range(attempts: list[str]) -> bool:
    for raw in attempts:
        try:
            v = json.loads(raw)
        except json.JSONDecodeError:
            continue
        s = v.get("score") if isinstance(v, dict) else None
        if isinstance(s, int) and not (1 <= s <= 5):
            return True
    return False
