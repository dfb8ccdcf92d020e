"""Bundled fixtures: benchmark theme sets, synthetic transcripts, embedders."""

from __future__ import annotations

import json
from importlib import resources

import numpy as np

from .domain import Speaker, ThemeSet, Transcript, Turn
from .gateway import hash_vector


def theme_fixture() -> dict[str, ThemeSet]:
    """The benchmark theme sets: 'human', 'before' and 'after' refinement."""
    raw = resources.files("themekit.data").joinpath("theme_fixture.json").read_text()
    return {k: ThemeSet.from_dict(v) for k, v in json.loads(raw).items()}


def synthetic_transcript() -> Transcript:
    """Bundled ~11.5k-word synthetic focus-group transcript."""
    raw = resources.files("themekit.data").joinpath(
        "synthetic_transcript.json").read_text()
    return Transcript.from_dict(json.loads(raw))


_TOPICS = [
    "the diagnosis and how the cardiologist explained the next steps",
    "waiting for surgery dates while trying to keep school routines normal",
    "watching for symptoms during sports and feeling anxious at practices",
    "talking with other parents who went through the same operation",
    "insurance paperwork and coordinating appointments across hospitals",
    "explaining the condition to siblings and grandparents",
    "recovery at home and slowly returning to everyday activities",
    "follow-up imaging and what the results might mean long term",
]

_PARENT_PHRASES = [
    "honestly we did not sleep much that first week",
    "the hardest part was not knowing what would happen",
    "our daughter kept asking when she could play soccer again",
    "we learned to ask every question twice until it made sense",
    "the nurses walked us through every monitor and wire",
    "I kept a notebook of every appointment and medication",
    "my husband and I took turns staying at the hospital",
    "we finally felt relief when the surgeon said it went well",
    "other families in the waiting room became our support system",
    "we still check on her at night even though she is fine",
]

_INTERVIEWER_PHRASES = [
    "can you tell me more about how that felt for your family",
    "what would have helped you most at that point",
    "how did your child respond to that experience",
    "what do you wish the care team had explained earlier",
]


def make_transcript(transcript_id: str, title: str, target_words: int,
                    seed: int = 0) -> Transcript:
    """Deterministic synthetic interview of roughly target_words words."""
    rng = np.random.default_rng(seed)
    turns: list[Turn] = []
    words = 0
    while words < target_words:
        if len(turns) % 2 == 0:
            topic = _TOPICS[int(rng.integers(0, len(_TOPICS)))]
            phrase = _INTERVIEWER_PHRASES[
                int(rng.integers(0, len(_INTERVIEWER_PHRASES)))]
            text = f"Thinking about {topic}, {phrase}?"
            speaker = Speaker.INTERVIEWER
        else:
            parts = [
                _PARENT_PHRASES[int(i)]
                for i in rng.integers(0, len(_PARENT_PHRASES),
                                      size=int(rng.integers(3, 7)))
            ]
            text = ". ".join(p.capitalize() for p in parts) + "."
            speaker = Speaker.PARTICIPANT
        turn = Turn(speaker=speaker, text=text)
        turns.append(turn)
        words = sum(len(t.text.split()) for t in turns)
    return Transcript(id=transcript_id, title=title, turns=tuple(turns))


class FixtureEmbedder:
    """Deterministic offline embedder.

    Texts found in the preloaded vector table use those vectors; anything
    else falls back to the seeded hash embedding, so the embedder is total.
    """

    def __init__(self, vectors: dict[str, list[float]] | None = None,
                 seed: int = 0, dim: int = 384):
        self.vectors = dict(vectors or {})
        self.seed = seed
        self.dim = dim

    def __call__(self, texts: list[str]) -> np.ndarray:
        out = []
        for t in texts:
            if t in self.vectors:
                out.append(np.asarray(self.vectors[t], dtype=float))
            else:
                out.append(hash_vector(t, self.seed, self.dim))
        return np.vstack(out)
