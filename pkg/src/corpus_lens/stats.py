"""Rank-based hypothesis tests, effect sizes and FDR control.

Every statistic is computed from sorted/merged ranks in O(N log N).
p-values use normal or chi-square approximations with tie-corrected
variances; the Wilcoxon signed-rank test switches to its exact
conditional sign-flip distribution for small samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import chi2

from .validation import DataError, check_groups, check_sample

EXACT_WILCOXON_MAX_N = 50


@dataclass(frozen=True)
class TestResult:
    method: str
    statistic: float
    p_value: float
    effect_size: float | None = None
    n: tuple[int, ...] = ()
    ties: dict = field(default_factory=dict)
    notes: dict = field(default_factory=dict)
    degenerate: bool = False

    __test__ = False  # not a pytest test class

    def as_dict(self) -> dict:
        n = list(self.n)
        return {
            "method": self.method,
            "statistic": self.statistic,
            "p": self.p_value,
            "effect": self.effect_size,
            "n1": n[0] if len(n) >= 1 else None,
            "n2": n[1] if len(n) >= 2 else None,
            "k": len(n),
            "N": int(sum(n)),
            "notes": {**self.notes, "ties": self.ties, "degenerate": self.degenerate},
        }


def _two_sided_normal(z: float) -> float:
    # 2 * P(Z > |z|) without cancellation in the far tail
    return float(min(1.0, 2.0 * ndtr(-abs(z))))


def midranks(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Average ranks (1-based) and the sizes of every tie group."""
    values = np.asarray(values)
    n = values.size
    order = np.argsort(values, kind="mergesort")
    sv = values[order]
    if n == 0:
        return np.zeros(0), np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, sv[1:] != sv[:-1]])
    ends = np.r_[starts[1:], n]
    counts = ends - starts
    # ranks starts+1 .. ends averaged
    avg = (starts + 1 + ends) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(avg, counts)
    return ranks, counts.astype(np.int64)


def _tie_term(counts: np.ndarray) -> float:
    c = counts[counts > 1].astype(np.float64)
    return float(np.sum(c ** 3 - c))


def _tie_summary(counts: np.ndarray) -> dict:
    tied = counts[counts > 1]
    return {"tie_groups": int(tied.size), "tied_values": int(tied.sum()), "tie_term": _tie_term(counts)}


def mann_whitney_u(x, y, continuity: bool = True) -> TestResult:
    """Two-sided Mann-Whitney U test.

    ``statistic`` is U for ``x``: the count of pairs with x > y plus half
    the tied pairs. The effect size is Cliff's delta, ``2U/(n1 n2) - 1``.
    """
    x = check_sample(x, "x")
    y = check_sample(y, "y")
    n1, n2 = x.size, y.size
    N = n1 + n2
    ranks, counts = midranks(np.concatenate([x, y]))
    r1 = float(np.sum(ranks[:n1]))
    u = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0
    tie = _tie_term(counts)
    var = n1 * n2 / 12.0 * ((N + 1) - tie / (N * (N - 1))) if N > 1 else 0.0
    degenerate = var <= 0
    if degenerate:
        p = 1.0
    else:
        z = (abs(u - mu) - (0.5 if continuity else 0.0)) / math.sqrt(var)
        p = _two_sided_normal(z) if z > 0 else 1.0
    return TestResult(
        "mann_whitney_u", u, p, effect_size=2.0 * u / (n1 * n2) - 1.0, n=(n1, n2),
        ties=_tie_summary(counts), notes={"continuity": continuity, "u_y": n1 * n2 - u},
        degenerate=degenerate,
    )


def kolmogorov_q(lam: float) -> float:
    """Kolmogorov tail ``Q(lam) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lam^2)``.

    Below lam = 1.18 the equivalent theta-function form is summed instead,
    because the alternating series converges too slowly there.
    """
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        a = math.pi ** 2 / (8.0 * lam * lam)
        s = 0.0
        for j in range(1, 60):
            term = math.exp(-(2 * j - 1) ** 2 * a)
            s += term
            if term < 1e-17 * max(s, 1e-300):
                break
        return float(min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * s)))
    s = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        s += term
        if abs(term) <= 1e-16 * abs(s):
            break
    return float(min(1.0, max(0.0, s)))


def ks_two_sample(x, y) -> TestResult:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic tail.

    p uses ``lam = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D`` with
    ``ne = n1 n2 / (n1 + n2)``.
    """
    x = np.sort(check_sample(x, "x"))
    y = np.sort(check_sample(y, "y"))
    n1, n2 = x.size, y.size
    pooled = np.unique(np.concatenate([x, y]))
    c1 = np.searchsorted(x, pooled, side="right").astype(np.int64)
    c2 = np.searchsorted(y, pooled, side="right").astype(np.int64)
    gap = np.abs(c1 * n2 - c2 * n1)
    k = int(np.argmax(gap))
    d = int(gap[k]) / (n1 * n2)
    ne = n1 * n2 / (n1 + n2)
    sq = math.sqrt(ne)
    lam = (sq + 0.12 + 0.11 / sq) * d
    return TestResult(
        "ks_two_sample", d, kolmogorov_q(lam), n=(n1, n2),
        notes={"lambda": lam, "argmax": float(pooled[k])},
    )


def _dominance_counts(x: np.ndarray, y: np.ndarray) -> tuple[int, int]:
    ys = np.sort(y)
    below = np.searchsorted(ys, x, side="left")
    above = ys.size - np.searchsorted(ys, x, side="right")
    return int(below.sum()), int(above.sum())


def cliffs_delta(x, y) -> float:
    """``(#{x > y} - #{x < y}) / (n1 n2)`` over all cross pairs."""
    x = check_sample(x, "x")
    y = check_sample(y, "y")
    gt, lt = _dominance_counts(x, y)
    return (gt - lt) / (x.size * y.size)


def _signflip_pvalue(doubled_ranks: np.ndarray, t_plus2: int) -> float:
    """Exact two-sided p of the signed-rank sum under random sign flips.

    Works on doubled ranks so that midranks stay integral.
    """
    total = int(doubled_ranks.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    top = 0
    for r in doubled_ranks.astype(np.int64):
        counts[r:top + r + 1] += counts[:top + 1].copy()
        top += r
    sums = np.arange(total + 1)
    extreme = np.abs(2 * sums - total) >= abs(2 * t_plus2 - total)
    return float(min(1.0, counts[extreme].sum() / 2.0 ** doubled_ranks.size))


def wilcoxon_signed_rank(x, y=None, zero_method: str = "wilcox", continuity: bool = True,
                         method: str = "auto") -> TestResult:
    """Paired two-sided Wilcoxon signed-rank test on ``x - y``.

    ``statistic`` is min(T+, T-); both sums are kept in ``notes``.
    ``zero_method="wilcox"`` drops zero differences before ranking and
    ``"pratt"`` ranks them and then ignores their signs. ``method`` is
    ``"approx"`` (normal with tie-corrected variance), ``"exact"``
    (sign-flip distribution of the observed midranks), or ``"auto"``,
    which is exact up to 50 nonzero differences.
    """
    if zero_method not in ("wilcox", "pratt"):
        raise ValueError("zero_method must be 'wilcox' or 'pratt'")
    if method not in ("auto", "exact", "approx"):
        raise ValueError("method must be 'auto', 'exact' or 'approx'")
    d = check_sample(x, "x")
    if y is not None:
        yy = check_sample(y, "y")
        if yy.size != d.size:
            raise DataError("paired samples must have equal length")
        d = d - yy
    nonzero = d != 0
    if not nonzero.any():
        raise DataError("degenerate: no nonzero differences")
    if zero_method == "wilcox":
        d = d[nonzero]
        nonzero = np.ones(d.size, dtype=bool)
    ranks, counts = midranks(np.abs(d))
    t_plus = float(ranks[d > 0].sum())
    t_minus = float(ranks[d < 0].sum())
    stat = min(t_plus, t_minus)
    n = d.size
    n_zero = int(n - nonzero.sum())
    n_eff = n - n_zero

    use_exact = method == "exact" or (method == "auto" and n_eff <= EXACT_WILCOXON_MAX_N)
    if use_exact:
        doubled = np.rint(2 * ranks[nonzero]).astype(np.int64)
        p = _signflip_pvalue(doubled, int(round(2 * t_plus)))
        z = None
    else:
        mn = n * (n + 1) / 4.0
        var = n * (n + 1) * (2 * n + 1) / 24.0
        if zero_method == "pratt" and n_zero:
            mn -= n_zero * (n_zero + 1) / 4.0
            var -= n_zero * (n_zero + 1) * (2 * n_zero + 1) / 24.0
        # the zero group's share was removed above, so only nonzero ties correct the variance
        _, nz_counts = midranks(np.abs(d[nonzero]))
        var -= _tie_term(nz_counts) / 48.0
        diff = stat - mn
        corr = 0.5 * np.sign(diff) if continuity else 0.0
        z = (diff - corr) / math.sqrt(var) if var > 0 else 0.0
        p = _two_sided_normal(z)
    return TestResult(
        "wilcoxon_signed_rank", stat, p, n=(n,), ties=_tie_summary(counts),
        notes={"t_plus": t_plus, "t_minus": t_minus, "zero_method": zero_method,
               "n_zero": n_zero, "method": "exact" if use_exact else "approx",
               "z": z, "continuity": continuity},
    )


def _pooled_ranks(groups: list[np.ndarray]):
    sizes = np.array([g.size for g in groups])
    ranks, counts = midranks(np.concatenate(groups))
    bounds = np.r_[0, np.cumsum(sizes)]
    sums = np.array([ranks[bounds[i]:bounds[i + 1]].sum() for i in range(len(groups))])
    return sizes, sums, counts


def kruskal_wallis(groups: Sequence) -> TestResult:
    """Kruskal-Wallis H with tie correction; effect size eta^2 = (H - k + 1)/(N - k)."""
    groups = check_groups(groups, 2)
    k = len(groups)
    sizes, sums, counts = _pooled_ranks(groups)
    N = int(sizes.sum())
    correction = 1.0 - _tie_term(counts) / (N ** 3 - N) if N > 1 else 0.0
    if correction <= 0:
        return TestResult("kruskal_wallis", 0.0, 1.0, effect_size=None, n=tuple(int(s) for s in sizes),
                          ties=_tie_summary(counts), notes={"df": k - 1}, degenerate=True)
    h0 = 12.0 / (N * (N + 1)) * float(np.sum(sums ** 2 / sizes)) - 3.0 * (N + 1)
    h = max(h0 / correction, 0.0)
    return TestResult(
        "kruskal_wallis", h, float(chi2.sf(h, k - 1)),
        effect_size=eta_squared(h, k, N) if N > k else None,
        n=tuple(int(s) for s in sizes), ties=_tie_summary(counts), notes={"df": k - 1},
    )


def eta_squared(h: float, k: int, n: int) -> float:
    """Kruskal-Wallis effect size from H, group count and total N."""
    if n <= k:
        raise ValueError("eta^2 needs N > k")
    return (h - k + 1) / (n - k)


@dataclass(frozen=True)
class PairwiseMatrix:
    names: tuple[str, ...]
    p_adjusted: np.ndarray
    p_raw: np.ndarray
    z: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        i, j = (self.names.index(p) for p in pair)
        return float(self.p_adjusted[i, j])


def dunn_z(groups: Sequence) -> np.ndarray:
    """Matrix of Dunn z statistics from pooled midranks (z[i, j] = -z[j, i])."""
    groups = [check_sample(g, f"group {i}") for i, g in enumerate(groups)]
    sizes, sums, counts = _pooled_ranks(groups)
    N = int(sizes.sum())
    mean_rank = sums / sizes
    var = N * (N + 1) / 12.0 - _tie_term(counts) / (12.0 * (N - 1)) if N > 1 else 0.0
    k = len(groups)
    z = np.zeros((k, k))
    if var <= 0:
        return z
    for i in range(k):
        for j in range(i + 1, k):
            z[i, j] = (mean_rank[i] - mean_rank[j]) / math.sqrt(var * (1.0 / sizes[i] + 1.0 / sizes[j]))
            z[j, i] = -z[i, j]
    return z


def dunn_posthoc(groups: Sequence, names: Sequence[str] | None = None, adjust: bool = True) -> PairwiseMatrix:
    """Dunn pairwise comparisons with Benjamini-Hochberg adjusted p-values.

    The adjustment runs over the k(k-1)/2 upper-triangle comparisons; the
    diagonal is fixed at 1.
    """
    if len(groups) < 3:
        raise DataError("Dunn post-hoc comparisons need at least 3 groups")
    for i, g in enumerate(groups):
        if len(g) == 0:
            name = names[i] if names else i
            raise DataError(f"group {name!r} is empty")
    names = tuple(names) if names is not None else tuple(str(i) for i in range(len(groups)))
    if len(names) != len(groups):
        raise ValueError("names and groups differ in length")
    z = dunn_z(groups)
    k = len(groups)
    iu = np.triu_indices(k, 1)
    p_upper = np.array([_two_sided_normal(v) for v in z[iu]])
    p_adj_upper = bh_fdr(p_upper) if adjust else p_upper
    p_raw = np.ones((k, k))
    p_adj = np.ones((k, k))
    p_raw[iu] = p_upper
    p_adj[iu] = p_adj_upper
    p_raw.T[iu] = p_upper
    p_adj.T[iu] = p_adj_upper
    return PairwiseMatrix(names, p_adj, p_raw, z)


def bh_fdr(p_values) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in input order."""
    p = np.asarray(p_values, dtype=np.float64).ravel()
    if p.size == 0:
        return p.copy()
    if np.any(~np.isfinite(p)) or np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="mergesort")
    scaled = p[order] * m / np.arange(1, m + 1)
    adj_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    out = np.empty(m)
    out[order] = np.minimum(adj_sorted, 1.0)
    # p * m / i >= p mathematically; repair 1-ulp rounding below the input
    return np.maximum(out, p)
