"""Similarity matrix between theme sets and the threshold metrics over it.

Scores are cosine similarities of embedded theme texts, clamped to [0, 1].
The threshold convention is >= theta throughout ("met or exceeded").
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import ThemeSet, first_sentence
from .errors import EmptyText, ValidationFailed


class ComparisonBasis(str, Enum):
    FIRST_SENTENCE = "first_sentence"
    FULL_DESCRIPTION = "full_description"
    NAME = "name"


def basis_text(theme, basis: ComparisonBasis) -> str:
    if basis is ComparisonBasis.NAME:
        return theme.name
    if basis is ComparisonBasis.FULL_DESCRIPTION:
        return theme.description
    return first_sentence(theme.description)


@dataclass(frozen=True)
class SimilarityMatrix:
    row_labels: tuple[str, ...]  # reference theme ids
    col_labels: tuple[str, ...]  # generated theme ids
    scores: tuple[tuple[float, ...], ...]
    comparison_basis: ComparisonBasis = ComparisonBasis.FIRST_SENTENCE
    embedding_model: str = ""

    def __post_init__(self):
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(self.col_labels))
        object.__setattr__(
            self, "scores", tuple(tuple(float(s) for s in row)
                                  for row in self.scores))
        if len(self.scores) != len(self.row_labels):
            raise ValidationFailed({"scores": "row count must match row labels"})
        for row in self.scores:
            if len(row) != len(self.col_labels):
                raise ValidationFailed(
                    {"scores": "column count must match column labels"})
            if not all(np.isfinite(row)):
                raise ValidationFailed({"scores": "all scores must be finite"})

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.row_labels), len(self.col_labels))

    def as_array(self) -> np.ndarray:
        return np.array(self.scores, dtype=float)

    def to_dict(self) -> dict:
        return {
            "row_labels": list(self.row_labels),
            "col_labels": list(self.col_labels),
            "scores": [list(r) for r in self.scores],
            "comparison_basis": self.comparison_basis.value,
            "embedding_model": self.embedding_model,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimilarityMatrix":
        return cls(
            row_labels=tuple(d["row_labels"]),
            col_labels=tuple(d["col_labels"]),
            scores=tuple(tuple(r) for r in d["scores"]),
            comparison_basis=ComparisonBasis(
                d.get("comparison_basis", "first_sentence")),
            embedding_model=d.get("embedding_model", ""),
        )


def build_matrix(reference: ThemeSet, generated: ThemeSet,
                 basis: ComparisonBasis, embed_fn,
                 embedding_model: str = "") -> SimilarityMatrix:
    """embed_fn: list[str] -> array-like of shape (n, dim)."""
    if not reference.themes or not generated.themes:
        raise ValidationFailed({"themes": "both theme sets must be non-empty"})
    ref_texts = [basis_text(t, basis) for t in reference.themes]
    gen_texts = [basis_text(t, basis) for t in generated.themes]
    for txt in ref_texts + gen_texts:
        if not txt.strip():
            raise EmptyText("theme has no comparable text for this basis")
    vecs = np.asarray(embed_fn(ref_texts + gen_texts), dtype=float)
    ref, gen = vecs[:len(ref_texts)], vecs[len(ref_texts):]
    norms_r = np.linalg.norm(ref, axis=1, keepdims=True)
    norms_g = np.linalg.norm(gen, axis=1, keepdims=True)
    cos = (ref / norms_r) @ (gen / norms_g).T
    clamped = np.clip(cos, 0.0, 1.0)
    return SimilarityMatrix(
        row_labels=tuple(t.id for t in reference.themes),
        col_labels=tuple(t.id for t in generated.themes),
        scores=tuple(tuple(row) for row in clamped),
        comparison_basis=basis,
        embedding_model=embedding_model,
    )


def _check_theta(theta: float) -> None:
    if not (0.0 < theta < 1.0):
        raise ValidationFailed({"theta": "must be in the open interval (0, 1)"})


def jaccard(matrix: SimilarityMatrix, theta: float) -> float:
    """Fraction of cells meeting the threshold, over all m*k pairs."""
    _check_theta(theta)
    a = matrix.as_array()
    return float(np.count_nonzero(a >= theta)) / a.size


def hit_rate(matrix: SimilarityMatrix, theta: float) -> float:
    """Fraction of reference rows with at least one cell meeting the threshold."""
    _check_theta(theta)
    a = matrix.as_array()
    return float(np.count_nonzero((a >= theta).any(axis=1))) / a.shape[0]


@dataclass(frozen=True)
class MetricsReport:
    theta: float
    jaccard: float
    hit_rate: float
    hits: tuple[tuple[str, str, float], ...]  # (reference id, best match id, score)
    matrix: SimilarityMatrix

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "jaccard": self.jaccard,
            "hit_rate": self.hit_rate,
            "hits": [[r, g, s] for r, g, s in self.hits],
            "matrix": self.matrix.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(
            theta=d["theta"], jaccard=d["jaccard"], hit_rate=d["hit_rate"],
            hits=tuple((h[0], h[1], h[2]) for h in d["hits"]),
            matrix=SimilarityMatrix.from_dict(d["matrix"]),
        )


def report(matrix: SimilarityMatrix, theta: float) -> MetricsReport:
    _check_theta(theta)
    a = matrix.as_array()
    hits = []
    for i, row_id in enumerate(matrix.row_labels):
        j = int(np.argmax(a[i]))
        if a[i, j] >= theta:
            hits.append((row_id, matrix.col_labels[j], float(a[i, j])))
    return MetricsReport(
        theta=theta,
        jaccard=jaccard(matrix, theta),
        hit_rate=hit_rate(matrix, theta),
        hits=tuple(hits),
        matrix=matrix,
    )


def threshold_sweep(matrix: SimilarityMatrix,
                    thetas: list[float]) -> list[MetricsReport]:
    if list(thetas) != sorted(thetas):
        raise ValidationFailed({"thetas": "must be sorted ascending"})
    return [report(matrix, t) for t in thetas]


def export_heatmap_csv(matrix: SimilarityMatrix) -> str:
    """CSV with row/column labels; scores rounded to 2 decimals."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["", *matrix.col_labels])
    for label, row in zip(matrix.row_labels, matrix.scores):
        writer.writerow([label, *[f"{s:.2f}" for s in row]])
    return buf.getvalue()


def export_heatmap_json(matrix: SimilarityMatrix) -> str:
    """JSON variant consumed by the review UI."""
    return json.dumps(matrix.to_dict(), indent=1)
