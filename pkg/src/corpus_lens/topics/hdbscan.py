"""HDBSCAN clustering over Euclidean distance.

Pipeline: core distances, mutual-reachability minimum spanning tree
(Prim), single-linkage dendrogram, condensation at ``min_cluster_size``,
then Excess-of-Mass selection of the flat clustering. Memory is O(n);
time is O(n^2 d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from ..validation import DataError, check_matrix

# Distances below this are treated as equal to it so that 1/d stays finite.
MIN_DISTANCE = 1e-12
# Gram-formula error on d^2 is a few ulp of |a|^2 + |b|^2; below this share the
# pair is recomputed directly, keeping relative distance error near 1e-13.
_REFINE_RATIO = 1e-2
_CHUNK = 256


def _refine(X: np.ndarray, sq: np.ndarray, rows: np.ndarray, d2: np.ndarray) -> None:
    """Recompute small Gram-based squared distances by direct differences, in place.

    ``d2`` is ``len(rows) x n``; cancellation makes the Gram formula
    inaccurate for nearly coincident points.
    """
    scale = sq[rows][:, None] + sq[None, :]
    r, c = np.nonzero(d2 <= _REFINE_RATIO * scale)
    if r.size:
        diff = X[rows[r]] - X[c]
        d2[r, c] = np.einsum("ij,ij->i", diff, diff)


def _sq_dist_rows(X: np.ndarray, sq: np.ndarray, rows: np.ndarray) -> np.ndarray:
    d2 = sq[rows][:, None] + sq[None, :] - 2.0 * (X[rows] @ X.T)
    np.maximum(d2, 0.0, out=d2)
    _refine(X, sq, rows, d2)
    d2[np.arange(rows.size), rows] = 0.0
    return d2


def core_distances(X: np.ndarray, min_samples: int) -> np.ndarray:
    """Distance from each point to its ``min_samples``-th nearest neighbour, counting itself."""
    n = X.shape[0]
    k = min(min_samples, n) - 1
    sq = np.einsum("ij,ij->i", X, X)
    core = np.empty(n)
    for start in range(0, n, _CHUNK):
        rows = np.arange(start, min(start + _CHUNK, n))
        d2 = _sq_dist_rows(X, sq, rows)
        core[rows] = np.sqrt(np.partition(d2, k, axis=1)[:, k])
    return core


def mutual_reachability_mst(X: np.ndarray, core: np.ndarray) -> np.ndarray:
    """Prim's algorithm on the implicit complete mutual-reachability graph.

    Returns ``(n - 1, 3)`` rows ``(u, v, weight)`` in insertion order.
    Ties in the frontier are broken toward the lowest vertex index.
    """
    n = X.shape[0]
    sq = np.einsum("ij,ij->i", X, X)
    in_tree = np.zeros(n, dtype=bool)
    key = np.full(n, np.inf)
    parent = np.full(n, -1, dtype=np.int64)
    edges = np.empty((max(n - 1, 0), 3))
    current = 0
    for step in range(n - 1):
        in_tree[current] = True
        d = np.sqrt(_sq_dist_rows(X, sq, np.array([current]))[0])
        mr = np.maximum(np.maximum(d, core), core[current])
        better = (~in_tree) & (mr < key)
        key[better] = mr[better]
        parent[better] = current
        masked = np.where(in_tree, np.inf, key)
        nxt = int(np.argmin(masked))
        edges[step] = (parent[nxt], nxt, key[nxt])
        current = nxt
    return edges


def single_linkage(edges: np.ndarray, n: int) -> np.ndarray:
    """Union-find merge of MST edges into a linkage matrix ``(a, b, dist, size)``.

    Edges are processed by weight, then by (min endpoint, max endpoint),
    which makes the dendrogram deterministic under tied weights.
    """
    u = edges[:, 0].astype(np.int64)
    v = edges[:, 1].astype(np.int64)
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    order = np.lexsort((hi, lo, edges[:, 2]))
    parent = np.arange(2 * n - 1)
    size = np.ones(2 * n - 1, dtype=np.int64)

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    out = np.empty((n - 1, 4))
    for i, e in enumerate(order):
        ra, rb = find(lo[e]), find(hi[e])
        new = n + i
        parent[ra] = parent[rb] = new
        size[new] = size[ra] + size[rb]
        out[i] = (ra, rb, edges[e, 2], size[new])
    return out


@dataclass(frozen=True)
class CondensedTree:
    """Rows ``parent -> child`` with the lambda (1/distance) at which the child leaves.

    Cluster ids start at ``n_points``; the root cluster is ``n_points``.
    """

    parent: np.ndarray
    child: np.ndarray
    lambda_val: np.ndarray
    child_size: np.ndarray
    n_points: int

    @property
    def is_cluster_row(self) -> np.ndarray:
        return self.child >= self.n_points


def condense_tree(linkage: np.ndarray, n: int, min_cluster_size: int) -> CondensedTree:
    root = 2 * n - 2
    left = linkage[:, 0].astype(np.int64)
    right = linkage[:, 1].astype(np.int64)
    dist = linkage[:, 2]
    sizes = np.ones(2 * n - 1, dtype=np.int64)
    sizes[n:] = linkage[:, 3].astype(np.int64)

    def leaves(node):
        stack, out = [node], []
        while stack:
            x = stack.pop()
            if x < n:
                out.append(x)
            else:
                stack.extend((right[x - n], left[x - n]))
        return out

    rows_p, rows_c, rows_l, rows_s = [], [], [], []

    def emit(p, c, lam, s):
        rows_p.append(p)
        rows_c.append(c)
        rows_l.append(lam)
        rows_s.append(s)

    next_label = n + 1
    label_of = {root: n}
    stack = [root] if n > 1 else []
    while stack:
        node = stack.pop()
        cl = label_of[node]
        i = node - n
        lam = 1.0 / max(dist[i], MIN_DISTANCE)
        a, b = left[i], right[i]
        big_a = sizes[a] >= min_cluster_size
        big_b = sizes[b] >= min_cluster_size
        if big_a and big_b:
            for child in (a, b):
                label_of[child] = next_label
                emit(cl, next_label, lam, sizes[child])
                next_label += 1
                stack.append(child)
        else:
            for child, big in ((a, big_a), (b, big_b)):
                if big:
                    label_of[child] = cl
                    if child >= n:
                        stack.append(child)
                    else:
                        emit(cl, child, lam, 1)
                else:
                    for pt in leaves(child):
                        emit(cl, pt, lam, 1)
    if n == 1:
        emit(n, 0, 1.0 / MIN_DISTANCE, 1)
    return CondensedTree(
        np.asarray(rows_p, dtype=np.int64), np.asarray(rows_c, dtype=np.int64),
        np.asarray(rows_l, dtype=np.float64), np.asarray(rows_s, dtype=np.int64), n,
    )


def cluster_stability(tree: CondensedTree) -> dict[int, float]:
    """Excess of mass of every cluster: sum over departures of (lambda - lambda_birth) * size."""
    n = tree.n_points
    birth = {n: 0.0}
    for c, lam in zip(tree.child[tree.is_cluster_row], tree.lambda_val[tree.is_cluster_row]):
        birth[int(c)] = float(lam)
    stability = {c: 0.0 for c in birth}
    for p, lam, s in zip(tree.parent, tree.lambda_val, tree.child_size):
        stability[int(p)] += (float(lam) - birth[int(p)]) * int(s)
    return stability


def extract_eom(tree: CondensedTree, allow_single_cluster: bool = False) -> tuple[np.ndarray, list[int], dict]:
    """Excess-of-Mass selection.

    A cluster is replaced by its children when their summed stability is
    at least its own (ties favour the finer clusters). The root is only
    eligible when ``allow_single_cluster`` is set or it has no child clusters.
    Returns point labels (-1 for noise), selected cluster ids and stabilities.
    """
    n = tree.n_points
    stability = cluster_stability(tree)
    cmask = tree.is_cluster_row
    children: dict[int, list[int]] = {c: [] for c in stability}
    cluster_parent: dict[int, int] = {}
    for p, c in zip(tree.parent[cmask], tree.child[cmask]):
        children[int(p)].append(int(c))
        cluster_parent[int(c)] = int(p)

    root_has_children = bool(children[n])
    root_ok = allow_single_cluster or not root_has_children
    selected = {c: True for c in stability}
    if not root_ok:
        selected[n] = False
    subtree = dict(stability)
    for c in sorted(stability, reverse=True):
        kids = children[c]
        if not kids:
            continue
        child_sum = sum(subtree[k] for k in kids)
        if c == n and not root_ok:
            subtree[c] = child_sum
            continue
        if child_sum >= stability[c]:
            selected[c] = False
            subtree[c] = child_sum
        else:
            todo = list(kids)
            while todo:
                k = todo.pop()
                selected[k] = False
                todo.extend(children[k])

    chosen = sorted(c for c, ok in selected.items() if ok)
    owner: dict[int, int] = {}
    for c in sorted(stability):
        if selected[c]:
            owner[c] = c
        elif c in cluster_parent:
            owner[c] = owner[cluster_parent[c]]
        else:
            owner[c] = -1
    index = {c: i for i, c in enumerate(chosen)}

    labels = np.full(n, -1, dtype=np.int64)
    pmask = ~cmask
    root_points = tree.parent[pmask] == n
    root_cut = tree.lambda_val[pmask][root_points].max() if root_points.any() else np.inf
    for p, c, lam in zip(tree.parent[pmask], tree.child[pmask], tree.lambda_val[pmask]):
        o = owner[int(p)]
        if o < 0:
            continue
        if o == n and int(p) == n and lam < root_cut:
            # a selected root keeps only points that survive to its densest level
            continue
        labels[int(c)] = index[o]
    return labels, chosen, stability


class HDBSCAN(ClusterMixin, BaseEstimator):
    """Density-based clustering with noise (label -1).

    Parameters
    ----------
    min_cluster_size : int, default=15
        Smallest group that counts as a cluster during condensation.
    min_samples : int or None, default=None
        Neighbourhood size for core distances, counting the point itself.
        Defaults to ``min_cluster_size``.
    allow_single_cluster : bool, default=False
        Let the root of the condensed tree be selected even when it splits.

    Attributes
    ----------
    labels_, n_clusters_, core_distances_, minimum_spanning_tree_,
    single_linkage_tree_, condensed_tree_, cluster_stability_
    """

    def __init__(self, min_cluster_size=15, min_samples=None, allow_single_cluster=False):
        self.min_cluster_size = min_cluster_size
        self.min_samples = min_samples
        self.allow_single_cluster = allow_single_cluster

    def fit(self, X, y=None):
        X = check_matrix(X)
        n = X.shape[0]
        mcs = int(self.min_cluster_size)
        ms = mcs if self.min_samples is None else int(self.min_samples)
        if mcs < 2:
            raise ValueError("min_cluster_size must be at least 2")
        if ms < 1:
            raise ValueError("min_samples must be at least 1")
        if n < mcs:
            raise DataError(f"need at least min_cluster_size={mcs} points, got {n}")
        self.core_distances_ = core_distances(X, ms)
        self.minimum_spanning_tree_ = mutual_reachability_mst(X, self.core_distances_)
        self.single_linkage_tree_ = single_linkage(self.minimum_spanning_tree_, n)
        self.condensed_tree_ = condense_tree(self.single_linkage_tree_, n, mcs)
        labels, chosen, stability = extract_eom(self.condensed_tree_, self.allow_single_cluster)
        self.labels_ = labels
        self.n_clusters_ = len(chosen)
        self.cluster_stability_ = {i: stability[c] for i, c in enumerate(chosen)}
        return self

    def fit_predict(self, X, y=None):
        return self.fit(X).labels_
