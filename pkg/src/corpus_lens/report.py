"""Aggregation tables, distribution datasets and byte-stable export."""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .sentiment import POLARITY_THRESHOLD
from .text import normalize
from .validation import DataError

DEFAULT_BINS = 40
DECIMALS = 6


@dataclass(frozen=True)
class SummaryRow:
    scope: str
    kind: str
    n: int
    mean: float
    std: float
    std_sample: float | None
    pct_positive: float
    pct_negative: float

    def as_dict(self) -> dict:
        return asdict(self)


def summarize(values: Sequence[float], scope: str, kind: str,
              threshold: float = POLARITY_THRESHOLD) -> SummaryRow:
    """One summary row. ``std`` divides by n, ``std_sample`` by n - 1."""
    v = np.sort(np.asarray(values, dtype=np.float64))
    n = v.size
    if n == 0:
        raise DataError(f"no values for {scope}/{kind}")
    mean = math.fsum(v) / n
    ss = math.fsum((v - mean) ** 2)
    return SummaryRow(
        scope=scope,
        kind=kind,
        n=int(n),
        mean=mean,
        std=math.sqrt(ss / n),
        std_sample=math.sqrt(ss / (n - 1)) if n > 1 else None,
        pct_positive=100.0 * int(np.count_nonzero(v >= threshold)) / n,
        pct_negative=100.0 * int(np.count_nonzero(v <= -threshold)) / n,
    )


def sentiment_summary(groups: Mapping[str, Sequence[float]], kind: str,
                      threshold: float = POLARITY_THRESHOLD) -> list[SummaryRow]:
    return [summarize(groups[s], s, kind, threshold) for s in sorted(groups)]


def word_frequencies(texts: Iterable[str], stopwords: Iterable[str] = ()) -> list[tuple[str, int]]:
    """Token counts after normalization, stopword removal and dropping 1-char tokens.

    >>> word_frequencies(["bike bike lane"])
    [('bike', 2), ('lane', 1)]
    """
    stop = frozenset(stopwords)
    counts: Counter = Counter()
    for text in texts:
        counts.update(t for t in normalize(text) if len(t) >= 2 and t not in stop)
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass(frozen=True)
class DistributionData:
    ecdf: tuple[tuple[float, float], ...]
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    box: dict

    def as_dict(self) -> dict:
        return {
            "n": int(sum(self.counts)),
            "ecdf": [{"value": v, "cum_frac": f} for v, f in self.ecdf],
            "histogram": {"edges": list(self.bin_edges), "counts": list(self.counts)},
            "box": self.box,
        }


def boxplot_stats(values: np.ndarray) -> dict:
    """Tukey box: quartiles (linear interpolation), whiskers at the most
    extreme points within 1.5 IQR of the box, and the outlier count."""
    v = np.sort(values)
    q1, med, q3 = (float(x) for x in np.percentile(v, [25, 50, 75]))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = v[(v >= lo_fence) & (v <= hi_fence)]
    return {
        "q1": q1,
        "median": med,
        "q3": q3,
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
        "n_outliers": int(v.size - inside.size),
    }


def distribution_data(values: Sequence[float], bins: int = DEFAULT_BINS,
                      value_range: tuple[float, float] = (-1.0, 1.0)) -> DistributionData:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise DataError("distribution needs at least one value")
    if bins < 1:
        raise ValueError("bins must be >= 1")
    uniq, mult = np.unique(v, return_counts=True)
    cum = np.cumsum(mult) / v.size
    ecdf = tuple((float(a), float(b)) for a, b in zip(uniq, cum))
    counts, edges = np.histogram(np.clip(v, *value_range), bins=bins, range=value_range)
    return DistributionData(ecdf, tuple(float(e) for e in edges), tuple(int(c) for c in counts), boxplot_stats(v))


def reference_values() -> dict[str, float]:
    """Published summary statistics for the optional comparison table."""
    raw = resources.files("corpus_lens.data").joinpath("reference_values.json").read_text("utf-8")
    return json.loads(raw)["values"]


def benchmark_rows(computed: Mapping[str, float | None],
                   reference: Mapping[str, float] | None = None) -> list[dict]:
    """Side-by-side table of reference and computed values. Agreement is
    reported, never enforced: it depends on data that is not bundled."""
    reference = reference_values() if reference is None else reference
    rows = []
    for key in sorted(reference):
        ref = reference[key]
        got = computed.get(key)
        diff = None if got is None else abs(got - ref)
        rows.append({"quantity": key, "reference": ref, "computed": got, "abs_diff": diff})
    return rows


# --- export -----------------------------------------------------------------

def format_float(x: float) -> str:
    """Fixed 6-decimal text; tiny magnitudes switch to exponent form so
    small p-values survive."""
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return ""
    x = float(x)
    if x == 0:
        return "0.000000"
    if abs(x) < 10.0 ** -(DECIMALS - 2):
        return f"{x:.{DECIMALS}e}"
    return f"{x:.{DECIMALS}f}"


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        text = format_float(float(obj))
        return float(text) if text else None
    if hasattr(obj, "as_dict"):
        return _jsonable(obj.as_dict())
    return obj


def to_csv(rows: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def to_json(obj: Any) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def export(table: Any, path, fmt: str | None = None, columns: Sequence[str] | None = None) -> Path:
    """Write ``table`` as CSV (list of row dicts plus ``columns``) or JSON.

    Output is byte-stable: sorted JSON keys, LF endings, UTF-8 and fixed
    float formatting. An empty CSV table still gets its header line.
    """
    fmt = fmt or Path(path).suffix.lstrip(".")
    if fmt == "csv":
        rows = [r.as_dict() if hasattr(r, "as_dict") else r for r in table]
        if columns is None:
            if not rows:
                raise ValueError("columns are required to export an empty table")
            columns = list(rows[0])
        return _write(path, to_csv(rows, columns))
    if fmt == "json":
        return _write(path, to_json(table))
    raise ValueError(f"unknown export format {fmt!r}; use 'csv' or 'json'")


def read_csv(path) -> list[dict[str, str]]:
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
