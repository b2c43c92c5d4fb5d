"""Keyword-driven assignment of posts to infrastructure aspects."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .text import contains_phrase, normalize

ASPECTS = (
    "protected lanes",
    "painted lanes",
    "bike lanes (general)",
    "paths and trails",
    "parking and storage",
    "intersections and signals",
    "transit integration",
    "construction and roadworks",
    "general infrastructure",
)


@dataclass(frozen=True)
class AspectLexicon:
    """Keyword phrases per aspect, stored as normalized token tuples."""

    phrases: Mapping[str, tuple[tuple[str, ...], ...]]

    def __post_init__(self):
        if set(self.phrases) != set(ASPECTS):
            missing = sorted(set(ASPECTS) - set(self.phrases))
            extra = sorted(set(self.phrases) - set(ASPECTS))
            raise ValueError(f"aspect lexicon must define exactly the nine aspects; missing={missing} extra={extra}")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Iterable[str]]) -> "AspectLexicon":
        phrases = {}
        for aspect, words in mapping.items():
            toks = {tuple(normalize(w)) for w in words}
            phrases[aspect] = tuple(sorted(t for t in toks if t))
        return cls(phrases)

    @classmethod
    def load(cls, path=None) -> "AspectLexicon":
        if path is None:
            raw = resources.files("corpus_lens.data").joinpath("aspect_lexicon.json").read_text("utf-8")
        else:
            raw = Path(path).read_text(encoding="utf-8")
        return cls.from_mapping(json.loads(raw))


@dataclass(frozen=True)
class AspectAssignment:
    doc_id: str
    aspects: frozenset[str]


def match_aspects(text: str, lexicon: AspectLexicon, doc_id: str = "") -> AspectAssignment:
    tokens = normalize(text)
    found = frozenset(
        aspect for aspect in ASPECTS
        if any(contains_phrase(tokens, p) for p in lexicon.phrases[aspect])
    )
    return AspectAssignment(doc_id, found)


class AspectMatcher(TransformerMixin, BaseEstimator):
    """Transformer producing an ``(n_docs, 9)`` 0/1 indicator matrix.

    Columns follow :data:`ASPECTS`.
    """

    def __init__(self, lexicon_path=None):
        self.lexicon_path = lexicon_path

    def fit(self, X=None, y=None):
        self.lexicon_ = AspectLexicon.load(self.lexicon_path)
        self.aspects_ = ASPECTS
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "lexicon_"):
            self.fit()
        out = np.zeros((len(X), len(ASPECTS)), dtype=np.int8)
        for i, text in enumerate(X):
            found = match_aspects(text, self.lexicon_).aspects
            for j, a in enumerate(ASPECTS):
                out[i, j] = a in found
        return out

    def get_feature_names_out(self, input_features=None):
        return np.asarray(ASPECTS, dtype=object)


@dataclass(frozen=True)
class AspectRow:
    region: str
    aspect: str
    n: int
    mean: float
    median: float


def aspect_summary(
    assignments: Iterable[AspectAssignment],
    sentiments: Mapping[str, float],
    region_of: Mapping[str, str],
) -> list[AspectRow]:
    """Per region and aspect: post count, mean and median compound.

    Combinations without posts are left out. Rows are ordered by region,
    then by the canonical aspect order.
    """
    buckets: dict[tuple[str, str], dict[str, float]] = {}
    for a in assignments:
        if a.doc_id not in sentiments:
            raise KeyError(f"no sentiment for document {a.doc_id!r}")
        region = region_of[a.doc_id]
        for aspect in a.aspects:
            buckets.setdefault((region, aspect), {})[a.doc_id] = sentiments[a.doc_id]
    order = {a: i for i, a in enumerate(ASPECTS)}
    rows = []
    for (region, aspect) in sorted(buckets, key=lambda k: (k[0], order[k[1]])):
        values = sorted(buckets[(region, aspect)].values())
        rows.append(AspectRow(region, aspect, len(values), float(np.mean(values)), statistics.median(values)))
    return rows
