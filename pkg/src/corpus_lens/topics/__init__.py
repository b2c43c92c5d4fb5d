"""Topic discovery: embeddings in, clusters plus keyword summaries out."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..validation import DataError
from .ctfidf import ClassTfidf, ctfidf_terms
from .embeddings import (EmbeddingError, EmbeddingMatrix, HashingEmbedder, fallback_embed,
                         load_embeddings, write_embeddings)
from .hdbscan import HDBSCAN

__all__ = [
    "ClassTfidf", "EmbeddingError", "EmbeddingMatrix", "HDBSCAN", "HashingEmbedder",
    "TopicModel", "TopicSummary", "ctfidf_terms", "fallback_embed", "load_embeddings",
    "topic_sentiment", "write_embeddings",
]


@dataclass(frozen=True)
class TopicSummary:
    topic_id: int
    n: int
    top_terms: tuple[tuple[str, float], ...]
    mean_sentiment: float

    def as_dict(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "n": self.n,
            "mean_sentiment": self.mean_sentiment,
            "terms": [{"term": t, "weight": w} for t, w in self.top_terms],
        }


def topic_sentiment(labels: Sequence[int], sentiments: Sequence[float]) -> dict[int, dict]:
    """``{topic: {"n": count, "mean": mean compound}}`` with noise left out."""
    labels = np.asarray(labels, dtype=np.int64)
    values = np.asarray(sentiments, dtype=np.float64)
    if labels.shape != values.shape:
        raise DataError("labels and sentiments are not aligned")
    out = {}
    for t in np.unique(labels[labels >= 0]):
        v = np.sort(values[labels == t])
        out[int(t)] = {"n": int(v.size), "mean": float(v.mean())}
    return out


class TopicModel:
    """Cluster document embeddings and describe each cluster.

    Rows flagged empty in the embedding matrix are never clustered and
    end up labelled -1. ``pca_components`` optionally projects the
    vectors before clustering (off by default).
    """

    def __init__(self, min_cluster_size: int = 15, min_samples: int | None = None, top_k: int = 10,
                 stopwords: Iterable[str] = (), pca_components: int | None = None, seed: int = 0):
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.top_k = top_k
        self.stopwords = frozenset(stopwords)
        self.pca_components = pca_components
        self.seed = seed

    def _project(self, X: np.ndarray) -> np.ndarray:
        if not self.pca_components:
            return X
        from sklearn.decomposition import PCA

        p = min(self.pca_components, X.shape[0], X.shape[1])
        return PCA(n_components=p, svd_solver="full", random_state=self.seed).fit_transform(X)

    def fit(self, matrix: EmbeddingMatrix, texts: Sequence[str], sentiments: Sequence[float]) -> "TopicModel":
        n = len(matrix)
        if len(texts) != n or len(sentiments) != n:
            raise DataError("embeddings, texts and sentiments must be aligned")
        usable = np.ones(n, dtype=bool) if matrix.empty is None else ~matrix.empty
        labels = np.full(n, -1, dtype=np.int64)
        idx = np.flatnonzero(usable)
        if idx.size >= self.min_cluster_size:
            X = self._project(matrix.vectors[idx])
            clusterer = HDBSCAN(self.min_cluster_size, self.min_samples).fit(X)
            labels[idx] = clusterer.labels_
        self.labels_ = labels
        grouped: dict[int, list[str]] = {}
        for text, lab in zip(texts, labels):
            if lab >= 0:
                grouped.setdefault(int(lab), []).append(text)
        terms = ctfidf_terms(grouped, self.top_k, self.stopwords) if grouped else {}
        sent = topic_sentiment(labels, sentiments)
        self.topics_ = [
            TopicSummary(t, sent[t]["n"], tuple(terms[t]), sent[t]["mean"]) for t in sorted(sent)
        ]
        self.n_clusters_ = len(self.topics_)
        return self
