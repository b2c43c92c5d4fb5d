"""Class-based TF-IDF keywords for document clusters.

weight(t, c) = tf(t, c) * log(1 + A / tf(t)), where tf(t, c) counts term t
inside cluster c, tf(t) counts it over all clusters, and A is the mean
number of tokens per cluster.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Mapping, Sequence

from sklearn.base import BaseEstimator

from ..text import load_stopwords, normalize


def _tokens(text: str, stopwords: frozenset[str]) -> list[str]:
    return [t for t in normalize(text) if len(t) >= 2 and t not in stopwords]


def ctfidf_weights(counts: Mapping[int, Counter]) -> dict[int, dict[str, float]]:
    """Weights for every (cluster, term) pair from per-cluster term counts."""
    if not counts:
        return {}
    total: Counter = Counter()
    for c in counts.values():
        total.update(c)
    avg = sum(total.values()) / len(counts)
    return {
        cid: {t: n * math.log(1.0 + avg / total[t]) for t, n in c.items()}
        for cid, c in counts.items()
    }


def rank_terms(weights: Mapping[str, float], top_k: int) -> list[tuple[str, float]]:
    """Highest weights first; equal weights fall back to alphabetical order."""
    if top_k <= 0:
        return []
    return sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]


def ctfidf_terms(texts_by_cluster: Mapping[int, Sequence[str]], top_k: int = 10,
                 stopwords: Iterable[str] = ()) -> dict[int, list[tuple[str, float]]]:
    """Top ``top_k`` terms per cluster. Noise (label -1) must be filtered by the caller."""
    stop = frozenset(stopwords)
    counts = {}
    for cid, texts in texts_by_cluster.items():
        if not texts:
            raise ValueError(f"cluster {cid} has no documents")
        c: Counter = Counter()
        for text in texts:
            c.update(_tokens(text, stop))
        counts[cid] = c
    weights = ctfidf_weights(counts)
    return {cid: rank_terms(weights[cid], top_k) for cid in sorted(weights)}


class ClassTfidf(BaseEstimator):
    """Estimator wrapper: ``fit(texts, labels)`` learns ``terms_`` per non-noise label.

    ``stopwords=None`` uses the bundled English list; pass an empty tuple
    to keep every token.
    """

    def __init__(self, top_k=10, stopwords=None):
        self.top_k = top_k
        self.stopwords = stopwords

    def fit(self, X, y):
        if len(X) != len(y):
            raise ValueError("texts and labels differ in length")
        stop = load_stopwords() if self.stopwords is None else frozenset(self.stopwords)
        grouped: dict[int, list[str]] = {}
        for text, label in zip(X, y):
            if int(label) >= 0:
                grouped.setdefault(int(label), []).append(text)
        self.terms_ = ctfidf_terms(grouped, self.top_k, stop)
        return self
