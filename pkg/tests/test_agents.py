import json
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from themekit.agents import (
    CRITERION_ORDER, GEvalScore, PromptTemplate, ReplayError,
    TemplateRenderError, apply_actions, dedupe_codes, evaluate_themes,
    generate_codes, geval_score, group_codes, load_templates, refine_themes,
    synthesize_themes,
)
from themekit.chunking import segment
from themekit.domain import (
    ActionKind, Code, CriterionFeedback, CriterionKind, GEvalParams, Issue,
    ProducedBy, RefinementAction, Theme, ThemeSet, default_criteria,
)
from themekit.errors import (
    ActionReplayMismatch, OutOfRangeScore, PartitionViolation,
    UnknownCodeReference, UnknownThemeReference, ValidationFailed,
)
from themekit.fixtures import theme_fixture
from themekit.gateway import Gateway, MockProvider

from conftest import make_code, make_theme, make_theme_set, \
    make_transcript_from_counts


def scripted(*responses) -> Gateway:
    return Gateway(MockProvider(script=[
        r if isinstance(r, str) else json.dumps(r) for r in responses]))


def one_chunk():
    return segment(make_transcript_from_counts([50]), 1500)[0]


# ---------------------------------------------------------------------------
# templates

def test_all_manifest_templates_load():
    templates = load_templates()
    assert {"code_generation", "code_grouping", "preliminary_themes",
            "theme_consolidation", "evaluation", "refinement",
            "geval"} <= set(templates)
    for t in templates.values():
        for p in t.required_placeholders:
            assert "{" + p + "}" in t.body


def test_template_missing_placeholder():
    t = PromptTemplate(id="x", body="a {goals} b",
                       required_placeholders=("goals",))
    assert t.render(goals="G") == "a G b"
    with pytest.raises(TemplateRenderError):
        t.render()


def test_template_leftover_placeholder():
    t = PromptTemplate(id="x", body="{goals} {background}",
                       required_placeholders=("goals", "background"))
    with pytest.raises(TemplateRenderError):
        t.render(goals="G", background="{goals}")


# ---------------------------------------------------------------------------
# code generation

CODE_LIST = {"codes": [
    {"name": "Fear of relapse at home", "description": "Parents fear relapse.",
     "quotes": "I kept checking at night."},
    {"name": "Sibling jealousy over attention",
     "description": "Siblings feel left out.", "quotes": "He asked why not me."},
]}


def test_generate_codes_ids_and_refs(study_config):
    codes = generate_codes(one_chunk(), study_config, scripted(CODE_LIST))
    assert [c.id for c in codes] == ["tr1.0.c0", "tr1.0.c1"]
    assert all(c.chunk_refs == (("tr1", 0),) for c in codes)
    assert codes[0].name == "Fear of relapse at home"


def test_generate_codes_sparse_chunk(study_config):
    assert generate_codes(one_chunk(), study_config,
                          scripted({"codes": []})) == []


# ---------------------------------------------------------------------------
# dedupe

def test_dedupe_merges_identical_names():
    a = make_code("c1")
    b = replace(make_code("c2"), chunk_refs=(("tr1", 1),))
    c = Code(id="c3", name="A completely different label entirely",
             description="d", quotes="q", chunk_refs=(("tr1", 2),))
    out = dedupe_codes([a, b, c], Gateway(MockProvider()))
    assert [x.id for x in out] == ["c1", "c3"]
    merged = out[0]
    assert merged.chunk_refs == (("tr1", 0), ("tr1", 1))
    assert merged.quotes == a.quotes + "\n" + b.quotes


def test_dedupe_keeps_distinct_names():
    a = Code(id="c1", name="Fear of relapse during recovery months",
             description="d", quotes="q", chunk_refs=(("tr1", 0),))
    b = Code(id="c2", name="Financial strain from travel to clinics",
             description="d", quotes="q", chunk_refs=(("tr1", 1),))
    out = dedupe_codes([a, b], Gateway(MockProvider()))
    assert [x.id for x in out] == ["c1", "c2"]


def test_dedupe_empty():
    assert dedupe_codes([], Gateway(MockProvider())) == []


# ---------------------------------------------------------------------------
# grouping

def test_group_single_code_no_call(study_config):
    code = make_code("c1")
    groups = group_codes([code], study_config, scripted())  # empty script
    assert len(groups) == 1
    assert groups[0].code_ids == ("c1",)


def test_group_codes_partition_ok(study_config):
    codes = [make_code(f"c{i}") for i in range(1, 4)]
    resp = {"groups": [{"label": "Support", "code_ids": ["c1", "c3"]},
                       {"label": "Worry", "code_ids": ["c2"]}]}
    groups = group_codes(codes, study_config, scripted(resp))
    assert [g.label for g in groups] == ["Support", "Worry"]


def test_group_codes_partition_repair_then_fail(study_config):
    codes = [make_code(f"c{i}") for i in range(1, 4)]
    bad = {"groups": [{"label": "Support", "code_ids": ["c1", "c1"]}]}
    with pytest.raises(PartitionViolation):
        group_codes(codes, study_config, scripted(bad, bad))


def test_group_codes_partition_repair_recovers(study_config):
    codes = [make_code(f"c{i}") for i in range(1, 3)]
    bad = {"groups": [{"label": "G", "code_ids": ["c1"]}]}
    good = {"groups": [{"label": "G", "code_ids": ["c1", "c2"]}]}
    groups = group_codes(codes, study_config, scripted(bad, good))
    assert groups[0].code_ids == ("c1", "c2")


# ---------------------------------------------------------------------------
# theme synthesis

def test_synthesize_themes_consolidation(study_config):
    codes = [make_code("c1"), make_code("c2")]
    groups = group_codes(codes, study_config, scripted(
        {"groups": [{"label": "G1", "code_ids": ["c1"]},
                    {"label": "G2", "code_ids": ["c2"]}]}))
    prelim1 = {"themes": [{"name": "Coping at home",
                           "description": "Families adapt routines.",
                           "supporting_code_ids": ["c1"]}]}
    prelim2 = {"themes": [{"name": "Hospital communication",
                           "description": "Information flow matters.",
                           "supporting_code_ids": ["c2"]}]}
    consolidated = {"themes": prelim1["themes"] + prelim2["themes"]}
    ts = synthesize_themes(groups, codes, study_config,
                           scripted(prelim1, prelim2, consolidated))
    assert ts.version == 0
    assert ts.produced_by is ProducedBy.GENERATION
    assert [t.id for t in ts.themes] == ["t1", "t2"]
    assert ts.themes[0].supporting_code_ids == ("c1",)


def test_synthesize_unknown_code_reference(study_config):
    codes = [make_code("c1")]
    groups = group_codes(codes, study_config, scripted())
    bad = {"themes": [{"name": "Ghost", "description": "x.",
                       "supporting_code_ids": ["nope"]}]}
    with pytest.raises(UnknownCodeReference):
        synthesize_themes(groups, codes, study_config, scripted(bad, bad))


# ---------------------------------------------------------------------------
# evaluation

def test_evaluate_four_calls_in_order(study_config):
    ts = make_theme_set(2)
    responses = [
        {"issues": [{"text": "A gap exists.", "theme_ids": []}]},
        {"issues": []},
        {"issues": [{"text": "t1 and t2 overlap.", "theme_ids": ["t1", "t2"]}]},
        {"issues": []},
    ]
    out = evaluate_themes(ts, [make_code("c1")], list(default_criteria()),
                          study_config, scripted(*responses))
    assert [f.criterion for f in out] == list(CRITERION_ORDER)
    assert out[0].suggested_action_kind is ActionKind.ADD
    assert out[2].issues[0].theme_ids == ("t1", "t2")


def test_evaluate_unknown_theme_reference(study_config):
    ts = make_theme_set(1)
    bad = {"issues": [{"text": "x", "theme_ids": ["zz"]}]}
    with pytest.raises(UnknownThemeReference):
        evaluate_themes(ts, [make_code("c1")], list(default_criteria()),
                        study_config, scripted(bad, bad))


def test_evaluate_requires_all_kinds(study_config):
    with pytest.raises(ValidationFailed):
        evaluate_themes(make_theme_set(1), [], list(default_criteria())[:3],
                        study_config, scripted())


# ---------------------------------------------------------------------------
# apply_actions replay oracle

def _result_map(*themes):
    return {t.id: t for t in themes}


def test_apply_delete():
    parent = make_theme_set(3)
    out = apply_actions(parent, [RefinementAction(
        kind=ActionKind.DELETE, source_theme_ids=("t2",),
        result_theme_ids=())], {})
    assert [t.id for t in out] == ["t1", "t3"]


def test_apply_add():
    parent = make_theme_set(2)
    new = make_theme("t9")
    out = apply_actions(parent, [RefinementAction(
        kind=ActionKind.ADD, source_theme_ids=(),
        result_theme_ids=("t9",))], _result_map(new))
    assert [t.id for t in out] == ["t1", "t2", "t9"]


def test_apply_split_in_place():
    parent = make_theme_set(3)
    a, b = make_theme("s1"), make_theme("s2")
    out = apply_actions(parent, [RefinementAction(
        kind=ActionKind.SPLIT, source_theme_ids=("t2",),
        result_theme_ids=("s1", "s2"))], _result_map(a, b))
    assert [t.id for t in out] == ["t1", "s1", "s2", "t3"]


def test_apply_combine_at_first_position():
    parent = make_theme_set(4)
    merged = make_theme("m1")
    out = apply_actions(parent, [RefinementAction(
        kind=ActionKind.COMBINE, source_theme_ids=("t4", "t2"),
        result_theme_ids=("m1",))], _result_map(merged))
    assert [t.id for t in out] == ["t1", "m1", "t3"]


def test_apply_errors():
    parent = make_theme_set(2)
    with pytest.raises(ReplayError):
        apply_actions(parent, [RefinementAction(
            kind=ActionKind.DELETE, source_theme_ids=("zz",),
            result_theme_ids=())], {})
    with pytest.raises(ReplayError):
        apply_actions(parent, [RefinementAction(
            kind=ActionKind.ADD, source_theme_ids=(),
            result_theme_ids=("t1",))], _result_map(make_theme("t1")))
    with pytest.raises(ReplayError):
        apply_actions(parent, [RefinementAction(
            kind=ActionKind.ADD, source_theme_ids=(),
            result_theme_ids=("t9",))], {})


@given(data=st.data())
def test_cardinality_law(data):
    """|child| = |parent| - deletes + adds + sum(splits: n-1) - sum(combines: n-1)."""
    n = data.draw(st.integers(3, 8))
    parent = make_theme_set(n)
    available = [t.id for t in parent.themes]
    actions, result_map, fresh = [], {}, iter(range(100))
    for _ in range(data.draw(st.integers(0, 4))):
        if not available:
            break
        kind = data.draw(st.sampled_from(list(ActionKind)))
        if kind is ActionKind.DELETE:
            src = data.draw(st.sampled_from(available))
            available.remove(src)
            actions.append(RefinementAction(
                kind=kind, source_theme_ids=(src,), result_theme_ids=()))
        elif kind is ActionKind.ADD:
            tid = f"n{next(fresh)}"
            result_map[tid] = make_theme(tid)
            available.append(tid)
            actions.append(RefinementAction(
                kind=kind, source_theme_ids=(), result_theme_ids=(tid,)))
        elif kind is ActionKind.SPLIT:
            src = data.draw(st.sampled_from(available))
            available.remove(src)
            parts = data.draw(st.integers(2, 3))
            tids = tuple(f"n{next(fresh)}" for _ in range(parts))
            for tid in tids:
                result_map[tid] = make_theme(tid)
                available.append(tid)
            actions.append(RefinementAction(
                kind=kind, source_theme_ids=(src,), result_theme_ids=tids))
        else:
            if len(available) < 2:
                continue
            srcs = data.draw(st.lists(st.sampled_from(available), min_size=2,
                                      max_size=min(3, len(available)),
                                      unique=True))
            for s in srcs:
                available.remove(s)
            tid = f"n{next(fresh)}"
            result_map[tid] = make_theme(tid)
            available.append(tid)
            actions.append(RefinementAction(
                kind=kind, source_theme_ids=tuple(srcs),
                result_theme_ids=(tid,)))
    out = apply_actions(parent, actions, result_map)
    expected = n
    for a in actions:
        expected += len(a.result_theme_ids) - len(a.source_theme_ids)
    assert len(out) == expected
    assert sorted(t.id for t in out) == sorted(available)


# ---------------------------------------------------------------------------
# refinement

def _four_feedback():
    return [CriterionFeedback(criterion=k, issues=(
        Issue(text="issue", theme_ids=()),)) for k in CRITERION_ORDER]


def test_refine_split_replays(study_config):
    parent = make_theme_set(2)
    s1 = {"id": "s1", "name": "Split one name here",
          "description": "First half.", "supporting_code_ids": []}
    s2 = {"id": "s2", "name": "Split two name here",
          "description": "Second half.", "supporting_code_ids": []}
    t2 = parent.themes[1].to_dict()
    plan = {
        "actions": [{"kind": "split", "source_theme_ids": ["t1"],
                     "result_theme_ids": ["s1", "s2"]}],
        "themes": [s1, s2, t2],
    }
    child, actions = refine_themes(parent, _four_feedback(), [], study_config,
                                   scripted(plan))
    assert child.version == 1
    assert child.parent_version == 0
    assert child.produced_by is ProducedBy.REFINEMENT
    assert [t.id for t in child.themes] == ["s1", "s2", "t2"]
    assert actions[0].kind is ActionKind.SPLIT


def test_refine_replay_mismatch(study_config):
    parent = make_theme_set(2)
    plan = {
        "actions": [{"kind": "delete", "source_theme_ids": ["t1"],
                     "result_theme_ids": []}],
        "themes": [parent.themes[0].to_dict(), parent.themes[1].to_dict()],
    }
    with pytest.raises(ActionReplayMismatch):
        refine_themes(parent, _four_feedback(), [], study_config,
                      scripted(plan, plan))


def test_refine_unknown_code_reference(study_config):
    parent = make_theme_set(1)
    theme = dict(parent.themes[0].to_dict(), supporting_code_ids=["ghost"])
    plan = {"actions": [], "themes": [theme]}
    with pytest.raises(ActionReplayMismatch):
        refine_themes(parent, _four_feedback(), [make_code("c1")],
                      study_config, scripted(plan, plan))


def test_refine_fixture_twelve_to_thirteen(study_config):
    """Replays the reference split: 12 generated themes into 13 refined ones."""
    before = theme_fixture()["before"]
    after = theme_fixture()["after"]
    assert len(before.themes) == 12
    assert len(after.themes) == 13
    # Script a plan: split the first theme into two, keep the rest.
    kept = [t.to_dict() for t in before.themes[1:]]
    new = [dict(after.themes[i].to_dict(), id=f"s{i}") for i in (0, 1)]
    plan = {
        "actions": [{"kind": "split",
                     "source_theme_ids": [before.themes[0].id],
                     "result_theme_ids": [t["id"] for t in new]}],
        "themes": new + kept,
    }
    child, _ = refine_themes(before, _four_feedback(), [], study_config,
                             scripted(plan))
    assert len(child.themes) == 13
    assert child.version == before.version + 1


# ---------------------------------------------------------------------------
# G-Eval advisory scoring

def test_geval_scores_and_mean(study_config):
    config = replace(study_config, geval_params=GEvalParams(runs=3))
    gw = scripted({"score": 4}, {"score": 5}, {"score": 4})
    score = geval_score(make_theme_set(2), [], config, gw)
    assert score.per_run_scores == (4, 5, 4)
    assert score.mean == pytest.approx(13 / 3)


def test_geval_out_of_range(study_config):
    config = replace(study_config, geval_params=GEvalParams(runs=2))
    gw = scripted('{"score": 9}', '{"score": 9}', '{"score": 9}')
    with pytest.raises(OutOfRangeScore):
        geval_score(make_theme_set(1), [], config, gw)


def test_geval_deterministic_mock(study_config):
    config = replace(study_config, geval_params=GEvalParams(runs=4))
    a = geval_score(make_theme_set(2), [], config, Gateway(MockProvider(seed=1)))
    b = geval_score(make_theme_set(2), [], config, Gateway(MockProvider(seed=1)))
    assert a.per_run_scores == b.per_run_scores


def test_geval_score_invariants():
    with pytest.raises(ValidationFailed):
        GEvalScore(per_run_scores=(4, 4), runs=3)
    assert GEvalScore(per_run_scores=(5, 4), runs=2).mean == 4.5
