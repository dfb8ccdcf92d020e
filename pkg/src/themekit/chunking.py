"""Transcript segmentation into coherent word-bounded chunks.

Coherence is operationalized as never splitting a speaker turn: a chunk
boundary can only fall between turns. A single turn longer than the limit
becomes its own chunk flagged oversized.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .domain import Transcript, word_count
from .errors import EmptyTranscript

TURN_SEPARATOR = "\n"


@dataclass(frozen=True)
class Chunk:
    transcript_id: str
    index: int
    turn_span: tuple[int, int]  # inclusive
    text: str
    word_count: int
    oversized_turn: bool = False

    def to_dict(self) -> dict:
        return {
            "transcript_id": self.transcript_id,
            "index": self.index,
            "turn_span": list(self.turn_span),
            "text": self.text,
            "word_count": self.word_count,
            "oversized_turn": self.oversized_turn,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Chunk":
        return cls(
            transcript_id=d["transcript_id"], index=d["index"],
            turn_span=(d["turn_span"][0], d["turn_span"][1]),
            text=d["text"], word_count=d["word_count"],
            oversized_turn=d.get("oversized_turn", False),
        )


def segment(transcript: Transcript, limit: int) -> list[Chunk]:
    """Greedy packing of whole turns into chunks of at most `limit` words."""
    if not transcript.turns:
        raise EmptyTranscript(f"transcript {transcript.id!r} has no turns")
    if limit < 100:
        raise ValueError("chunk word limit must be at least 100")

    counts = [word_count(t.text) for t in transcript.turns]
    chunks: list[Chunk] = []
    start = 0
    acc = counts[0]
    for i, c in enumerate(counts[1:], start=1):
        if acc + c > limit:
            chunks.append(_make(transcript, len(chunks), start, i - 1, acc, limit))
            start = i
            acc = c
        else:
            acc += c
    chunks.append(_make(transcript, len(chunks), start, len(counts) - 1, acc, limit))
    return chunks


def _make(transcript: Transcript, index: int, first: int, last: int,
          words: int, limit: int) -> Chunk:
    text = TURN_SEPARATOR.join(t.text for t in transcript.turns[first:last + 1])
    return Chunk(
        transcript_id=transcript.id,
        index=index,
        turn_span=(first, last),
        text=text,
        word_count=words,
        oversized_turn=words > limit,
    )


@dataclass(frozen=True)
class ChunkStats:
    count: int
    mean_words: Fraction
    max_words: int
    oversized_count: int


def chunk_stats(chunks: list[Chunk]) -> ChunkStats:
    """Exact aggregates over chunk word counts; zeroed for the empty list."""
    if not chunks:
        return ChunkStats(0, Fraction(0), 0, 0)
    counts = [c.word_count for c in chunks]
    return ChunkStats(
        count=len(chunks),
        mean_words=Fraction(sum(counts), len(counts)),
        max_words=max(counts),
        oversized_count=sum(1 for c in chunks if c.oversized_turn),
    )


def labeled_text(transcript: Transcript, chunk: Chunk) -> str:
    """Chunk text with speaker labels, for prompt rendering."""
    first, last = chunk.turn_span
    return TURN_SEPARATOR.join(
        f"{t.speaker.value}: {t.text}" for t in transcript.turns[first:last + 1]
    )
