import pytest

from themekit.domain import (
    Code, Criterion, CriterionKind, ProducedBy, Speaker, StudyConfig, Theme,
    ThemeSet, Transcript, Turn, default_criteria,
)


def make_words(n: int, stem: str = "word") -> str:
    return " ".join(f"{stem}{i}" for i in range(n))


def make_code(code_id: str = "c1", name_words: int = 10,
              desc_words: int = 80, quote_words: int = 120,
              chunk_refs=(("tr1", 0),)) -> Code:
    return Code(
        id=code_id,
        name=make_words(name_words, "name"),
        description=make_words(desc_words, "desc"),
        quotes=make_words(quote_words, "quote"),
        chunk_refs=chunk_refs,
    )


def make_theme(theme_id: str, name: str | None = None,
               description: str | None = None, codes=()) -> Theme:
    return Theme(
        id=theme_id,
        name=name or f"Theme {theme_id} about parents coping with care",
        description=description or f"Theme {theme_id} first sentence. More detail.",
        supporting_code_ids=tuple(codes),
    )


def make_theme_set(n: int, version: int = 0,
                   produced_by=ProducedBy.GENERATION,
                   parent_version=None, prefix: str = "t") -> ThemeSet:
    return ThemeSet(
        version=version,
        themes=tuple(make_theme(f"{prefix}{i}") for i in range(1, n + 1)),
        produced_by=produced_by,
        parent_version=parent_version,
    )


def make_transcript_from_counts(counts, transcript_id="tr1") -> Transcript:
    return Transcript(
        id=transcript_id, title="test",
        turns=tuple(
            Turn(speaker=Speaker.PARTICIPANT, text=make_words(c, f"t{i}w"))
            for i, c in enumerate(counts)
        ),
    )


@pytest.fixture
def study_config() -> StudyConfig:
    return StudyConfig(
        background="Parents of children with a rare heart condition.",
        goals="Identify all codes and themes from the transcripts.",
    )


@pytest.fixture
def four_criteria() -> list[Criterion]:
    return list(default_criteria())
