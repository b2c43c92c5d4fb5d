"""Random-intercept linear mixed model fitted by profiled (RE)ML.

Model: ``y = X beta + Z b + e`` with one intercept per city,
``b ~ N(0, s2_city I)`` and ``e ~ N(0, s2_e I)``. For a fixed variance
ratio ``lam = s2_city / s2_e`` the marginal covariance ``s2_e (I + lam Z Z')``
is block diagonal per city, so beta and s2_e have closed forms and the
likelihood reduces to a one-dimensional function of ``log(lam)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from sklearn.base import BaseEstimator, RegressorMixin

from .validation import DataError, NumericError, check_sample

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LOG_2PI = math.log(2.0 * math.pi)


def icc(var_group: float, var_resid: float) -> float:
    """Intraclass correlation ``var_group / (var_group + var_resid)``."""
    if var_resid <= 0:
        raise ValueError("residual variance must be positive")
    if var_group < 0:
        raise ValueError("group variance must be non-negative")
    return var_group / (var_group + var_resid)


@dataclass(frozen=True)
class VarianceComponents:
    var_group: float
    var_resid: float
    icc: float
    beta: dict
    loglik: float
    lam: float
    n_cities: int
    n_obs: int
    converged: bool
    method: str = "reml"
    city_effects: dict = field(default_factory=dict, repr=False)
    optimizer_trace: tuple = field(default=(), repr=False)

    def as_dict(self) -> dict:
        return {
            "var_city": self.var_group,
            "var_resid": self.var_resid,
            "icc": self.icc,
            "n_cities": self.n_cities,
            "n_obs": self.n_obs,
            "loglik": self.loglik,
            "lambda": self.lam,
            "converged": self.converged,
            "method": self.method,
            "beta": self.beta,
            "n_evals": len(self.optimizer_trace),
        }


def _design(units, n: int):
    """Intercept plus treatment dummies; the lexicographically first unit is the reference."""
    if units is None:
        return np.ones((n, 1)), ["(Intercept)"]
    units = np.asarray([str(u) for u in units])
    if units.shape[0] != n:
        raise DataError("unit labels and responses differ in length")
    levels = sorted(set(units.tolist()))
    names = ["(Intercept)"] + [f"unit[{lv}]" for lv in levels[1:]]
    X = np.zeros((n, len(levels)))
    X[:, 0] = 1.0
    for j, lv in enumerate(levels[1:], start=1):
        X[units == lv, j] = 1.0
    return X, names


def _check_rank(X: np.ndarray, names: list[str]) -> None:
    kept: list[int] = []
    bad: list[str] = []
    for j in range(X.shape[1]):
        cols = X[:, kept + [j]]
        if np.linalg.matrix_rank(cols) == len(kept) + 1:
            kept.append(j)
        else:
            bad.append(names[j])
    if bad:
        raise DataError(f"fixed-effect design is rank deficient; collinear levels: {', '.join(bad)}")


class _Profile:
    """Sufficient statistics per city and the profiled criterion."""

    def __init__(self, y: np.ndarray, X: np.ndarray, city_codes: np.ndarray, n_cities: int, reml: bool):
        self.reml = reml
        self.N, self.p = X.shape
        self.n_j = np.bincount(city_codes, minlength=n_cities).astype(np.float64)
        self.S = np.zeros((n_cities, self.p))
        np.add.at(self.S, city_codes, X)
        self.ysum = np.bincount(city_codes, weights=y, minlength=n_cities)
        self.XtX = X.T @ X
        self.Xty = X.T @ y
        self.yty = float(y @ y)
        self.df = self.N - self.p if reml else self.N
        if self.df <= 0:
            raise DataError("not enough observations for the fixed-effect design")

    def solve(self, lam: float):
        w = lam / (1.0 + lam * self.n_j)
        A = self.XtX - (self.S.T * w) @ self.S
        b = self.Xty - self.S.T @ (w * self.ysum)
        c = self.yty - float(np.sum(w * self.ysum ** 2))
        try:
            L = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"GLS system not positive definite at lambda={lam:g}") from exc
        beta = np.linalg.solve(L.T, np.linalg.solve(L, b))
        rss = c - float(b @ beta)
        return beta, max(rss, 0.0), 2.0 * float(np.sum(np.log(np.diag(L))))

    def loglik(self, lam: float) -> float:
        _, rss, logdet_a = self.solve(lam)
        if rss <= 0:
            return -math.inf
        sigma2 = rss / self.df
        val = self.df * math.log(sigma2) + float(np.sum(np.log1p(lam * self.n_j))) + self.df * (1.0 + _LOG_2PI)
        if self.reml:
            val += logdet_a
        return -0.5 * val

    def score(self, lam: float) -> float:
        """Derivative of :meth:`loglik` with respect to ``log(lam)``."""
        beta, rss, _ = self.solve(lam)
        shrink = 1.0 / (1.0 + lam * self.n_j)
        resid_sum = (self.ysum - self.S @ beta) * shrink
        d_rss = -float(np.sum(resid_sum ** 2))
        d = self.df * d_rss / rss + float(np.sum(self.n_j * shrink))
        if self.reml:
            w = lam / (1.0 + lam * self.n_j)
            A = self.XtX - (self.S.T * w) @ self.S
            dA = -(self.S.T * shrink ** 2) @ self.S
            d += float(np.trace(np.linalg.solve(A, dA)))
        return -0.5 * d * lam


def _maximize(f, lo: float, hi: float, tol: float, trace: list):
    """Coarse grid followed by golden-section refinement around the best grid point."""

    def g(t):
        v = f(math.exp(t))
        trace.append((t, v))
        return v

    grid = np.linspace(lo, hi, int(round((hi - lo) / 0.25)) + 1)
    vals = [g(t) for t in grid]
    k = int(np.argmax(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = g(c), g(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = g(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = g(d)
    t_best, f_best = (c, fc) if fc >= fd else (d, fd)
    if vals[k] > f_best:
        t_best, f_best = grid[k], vals[k]
    return t_best, f_best


def _polish(prof: _Profile, t: float, f: float, lo: float, hi: float, trace: list):
    """Sharpen an interior optimum by solving score = 0 near ``t``.

    The criterion is flat at its maximum, so comparing values alone pins
    ``log(lam)`` only to about the square root of machine precision; the
    score changes sign cleanly and brings the root down to rounding level.
    """
    step = 1e-4
    a, b = max(lo, t - step), min(hi, t + step)
    try:
        ga, gb = prof.score(math.exp(a)), prof.score(math.exp(b))
    except NumericError:
        return t, f
    if not (ga > 0 > gb):
        return t, f
    root = brentq(lambda u: prof.score(math.exp(u)), a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    val = prof.loglik(math.exp(root))
    trace.append((root, val))
    # equal up to rounding counts as a success: the root is the better location
    if val >= f - 1e-12 * max(1.0, abs(f)):
        return root, val
    return t, f


def fit_random_intercept(response, city, unit=None, method: str = "reml",
                         log_lambda_bounds: tuple[float, float] = (-12.0, 6.0),
                         tol: float = 1e-8) -> VarianceComponents:
    """Fit the city random-intercept model.

    Parameters
    ----------
    response : array-like of float
    city : array-like
        City label per observation (the random-intercept grouping).
    unit : array-like or None
        Fixed-effect categorical (state or country); None fits an
        intercept-only model.
    method : {"reml", "ml"}
    log_lambda_bounds : search interval for ``log(s2_city / s2_e)``.
    tol : golden-section stopping width on ``log(lambda)``.

    A maximum at the lower edge that does not beat ``lambda = 0`` is
    reported as a boundary fit with zero city variance.
    """
    if method not in ("reml", "ml"):
        raise ValueError("method must be 'reml' or 'ml'")
    y = check_sample(response, "response", min_size=2)
    cities = np.asarray([str(c) for c in city])
    if cities.shape[0] != y.size:
        raise DataError("city labels and responses differ in length")
    levels, codes = np.unique(cities, return_inverse=True)
    if levels.size < 2:
        raise DataError("need at least 2 cities")
    counts = np.bincount(codes)
    if counts.max() < 2:
        raise DataError("need at least one city with 2 or more observations")
    X, names = _design(unit, y.size)
    _check_rank(X, names)

    # canonical row order so every sum below is independent of input order
    order = np.lexsort((y, codes) + tuple(X[:, j] for j in range(X.shape[1] - 1, 0, -1)))
    y, codes, X = y[order], codes[order], X[order]

    # Standardizing y keeps the optimizer path identical under rescaling;
    # the intercept absorbs the shift.
    shift = float(np.mean(y))
    scale = float(np.std(y))
    if scale == 0:
        raise NumericError("response has zero variance")
    ys = (y - shift) / scale

    prof = _Profile(ys, X, codes, levels.size, reml=(method == "reml"))
    trace: list = []
    lo, hi = log_lambda_bounds
    t_best, f_best = _maximize(prof.loglik, lo, hi, tol, trace)
    t_best, f_best = _polish(prof, t_best, f_best, lo, hi, trace)
    f_zero = prof.loglik(0.0)
    trace.append((-math.inf, f_zero))
    lam = math.exp(t_best)
    if f_zero >= f_best:
        lam, f_best = 0.0, f_zero
    converged = bool(hi - t_best > 10 * tol)

    beta_s, rss, _ = prof.solve(lam)
    sigma2 = rss / prof.df
    var_resid = sigma2 * scale ** 2
    var_group = lam * var_resid
    beta = beta_s * scale
    beta[0] += shift
    loglik = f_best - prof.df * math.log(scale)

    resid_sum = prof.ysum - prof.S @ beta_s
    blup = lam * resid_sum / (1.0 + lam * prof.n_j) * scale
    return VarianceComponents(
        var_group=float(var_group),
        var_resid=float(var_resid),
        icc=icc(float(var_group), float(var_resid)),
        beta={n: float(b) for n, b in zip(names, beta)},
        loglik=float(loglik),
        lam=float(lam),
        n_cities=int(levels.size),
        n_obs=int(y.size),
        converged=converged,
        method=method,
        city_effects={str(c): float(v) for c, v in zip(levels, blup)},
        optimizer_trace=tuple(trace),
    )


class RandomInterceptLM(RegressorMixin, BaseEstimator):
    """Estimator interface to :func:`fit_random_intercept`.

    ``X`` holds the fixed-effect unit label per row (shape ``(n,)`` or
    ``(n, 1)``), or None for an intercept-only model; ``groups`` holds
    the city labels.
    """

    def __init__(self, method="reml", log_lambda_bounds=(-12.0, 6.0), tol=1e-8):
        self.method = method
        self.log_lambda_bounds = log_lambda_bounds
        self.tol = tol

    @staticmethod
    def _units(X):
        if X is None:
            return None
        arr = np.asarray(X, dtype=object)
        if arr.ndim == 2:
            if arr.shape[1] != 1:
                raise DataError("X must contain a single categorical column")
            arr = arr[:, 0]
        return arr

    def fit(self, X, y, groups):
        self.components_ = fit_random_intercept(
            y, groups, self._units(X), method=self.method,
            log_lambda_bounds=tuple(self.log_lambda_bounds), tol=self.tol,
        )
        self.var_group_ = self.components_.var_group
        self.var_resid_ = self.components_.var_resid
        self.icc_ = self.components_.icc
        self.coef_ = self.components_.beta
        return self

    def predict(self, X, groups=None):
        """Fixed-effect prediction plus the city BLUP for cities seen in fit."""
        units = self._units(X)
        n = len(groups) if units is None and groups is not None else len(units)
        coef = self.components_.beta
        out = np.full(n, coef["(Intercept)"])
        if units is not None:
            out += np.array([coef.get(f"unit[{u}]", 0.0) for u in units])
        if groups is not None:
            eff = self.components_.city_effects
            out += np.array([eff.get(str(g), 0.0) for g in groups])
        return out
