"""Embedding matrices: file loading and a deterministic hashing embedder."""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ..text import normalize
from ..validation import DataError


class EmbeddingError(DataError):
    pass


@dataclass(frozen=True)
class EmbeddingMatrix:
    doc_ids: tuple[str, ...]
    vectors: np.ndarray
    empty: np.ndarray | None = None  # rows that are all-zero (no usable tokens)

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.doc_ids)

    def subset(self, ids: Sequence[str]) -> "EmbeddingMatrix":
        pos = {d: i for i, d in enumerate(self.doc_ids)}
        missing = [d for d in ids if d not in pos]
        if missing:
            raise EmbeddingError(f"no embedding for {len(missing)} document(s), e.g. {missing[0]!r}")
        idx = np.array([pos[d] for d in ids], dtype=np.int64)
        empty = None if self.empty is None else self.empty[idx]
        return EmbeddingMatrix(tuple(ids), self.vectors[idx], empty)


def _l2_normalize(vectors: np.ndarray, doc_ids: Sequence[str]) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise EmbeddingError(f"row {zero[0] + 1} ({doc_ids[zero[0]]!r}): zero vector cannot be normalized")
    return vectors / norms[:, None]


def _parse_text(lines: list[str]) -> tuple[list[str], list[list[float]]]:
    header = lines[0].split()
    if len(header) != 2:
        raise EmbeddingError("first line must be 'n d'")
    n, d = int(header[0]), int(header[1])
    rows = lines[1:]
    if len(rows) != n:
        raise EmbeddingError(f"header declares {n} rows but file holds {len(rows)}")
    ids, vecs = [], []
    for i, line in enumerate(rows, start=1):
        parts = line.split()
        if len(parts) != d + 1:
            raise EmbeddingError(f"row {i}: expected doc_id plus {d} values, got {len(parts) - 1} values")
        ids.append(parts[0])
        vecs.append([float(v) for v in parts[1:]])
    return ids, vecs


def _parse_jsonl(lines: list[str]) -> tuple[list[str], list[list[float]]]:
    ids, vecs = [], []
    d = None
    for i, line in enumerate(lines, start=1):
        obj = json.loads(line)
        vec = [float(v) for v in obj["vector"]]
        if d is None:
            d = len(vec)
        elif len(vec) != d:
            raise EmbeddingError(f"row {i}: dimension {len(vec)} differs from {d}")
        ids.append(str(obj["doc_id"]))
        vecs.append(vec)
    return ids, vecs


def load_embeddings(path, raw: bool = False) -> EmbeddingMatrix:
    """Read embeddings from a whitespace text file or JSONL.

    Text format: header ``n d`` then ``doc_id v1 ... vd`` per line.
    JSONL format: ``{"doc_id": ..., "vector": [...]}`` per line.
    Rows are L2-normalized unless ``raw`` is set.
    """
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not lines:
        return EmbeddingMatrix((), np.zeros((0, 0)))
    ids, vecs = (_parse_jsonl if lines[0].lstrip().startswith("{") else _parse_text)(lines)
    if len(set(ids)) != len(ids):
        raise EmbeddingError("duplicate doc_id in embeddings file")
    X = np.asarray(vecs, dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(X).all(axis=1))
    if bad.size:
        raise EmbeddingError(f"row {bad[0] + 1} ({ids[bad[0]]!r}): non-finite value")
    if not raw:
        X = _l2_normalize(X, ids)
    return EmbeddingMatrix(tuple(ids), X)


def write_embeddings(matrix: EmbeddingMatrix, path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(matrix)} {matrix.dim}\n")
        for doc_id, row in zip(matrix.doc_ids, matrix.vectors):
            fh.write(doc_id + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def _bucket(token: str, seed: int, dim: int) -> int:
    h = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=(seed % 2**64).to_bytes(8, "little"))
    return int.from_bytes(h.digest(), "little") % dim


class HashingEmbedder(TransformerMixin, BaseEstimator):
    """Hashed bag-of-words with smoothed TF-IDF weights, L2-normalized.

    A deterministic stand-in for sentence embeddings, meant for tests and
    runs without an external embedding file. Documents with no tokens map
    to the zero vector.
    """

    def __init__(self, dim=256, seed=0, stopwords=None):
        self.dim = dim
        self.seed = seed
        self.stopwords = stopwords

    def _tokens(self, text):
        stop = self.stopwords or ()
        return [t for t in normalize(text) if t not in stop]

    def fit(self, X, y=None):
        if self.dim < 8:
            raise ValueError("dim must be at least 8")
        df = Counter()
        for text in X:
            df.update(set(self._tokens(text)))
        n = len(X)
        self.idf_ = {t: math.log((1 + n) / (1 + c)) + 1.0 for t, c in df.items()}
        self.default_idf_ = math.log(1 + n) + 1.0
        return self

    def transform(self, X) -> np.ndarray:
        out = np.zeros((len(X), self.dim))
        for i, text in enumerate(X):
            # sorted accumulation keeps sums independent of dict ordering
            for tok, cnt in sorted(Counter(self._tokens(text)).items()):
                out[i, _bucket(tok, self.seed, self.dim)] += cnt * self.idf_.get(tok, self.default_idf_)
        norms = np.linalg.norm(out, axis=1)
        nz = norms > 0
        out[nz] /= norms[nz, None]
        return out


def fallback_embed(texts: Sequence[str], dim: int = 256, seed: int = 0,
                   doc_ids: Sequence[str] | None = None, stopwords=None) -> EmbeddingMatrix:
    """Embed ``texts`` with :class:`HashingEmbedder`; zero rows are flagged in ``empty``."""
    texts = list(texts)
    ids = tuple(doc_ids) if doc_ids is not None else tuple(str(i) for i in range(len(texts)))
    X = HashingEmbedder(dim=dim, seed=seed, stopwords=stopwords).fit_transform(texts)
    return EmbeddingMatrix(ids, X, empty=~np.any(X != 0, axis=1))
