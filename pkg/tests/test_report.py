import math

import numpy as np
import pytest

from corpus_lens.report import (benchmark_rows, boxplot_stats, distribution_data, export, format_float, read_csv,
                                reference_values, sentiment_summary, summarize, to_json, word_frequencies)
from corpus_lens.validation import DataError

STOP = {"the", "a", "on", "is", "to", "of", "and", "in", "my"}
TEN_DOCS = [
    "The bike lane is new",
    "Bike theft on Main",
    "A lane closure",
    "My bike, my lock",
    "Lock the bike to a rack",
    "Rack of bikes",
    "New lane and new rack",
    "Theft in the park",
    "x y z",
    "Bike-lane bike lane",
]
# counted by hand
TEN_DOCS_COUNTS = [("bike", 6), ("lane", 5), ("new", 3), ("rack", 3), ("lock", 2), ("theft", 2),
                   ("bikes", 1), ("closure", 1), ("main", 1), ("park", 1)]


def test_summary_examples():
    row = summarize([0.1, -0.1], "US", "posts")
    assert row.mean == pytest.approx(0.0, abs=1e-15) and row.std == pytest.approx(0.1)
    assert row.pct_positive == 50.0 and row.pct_negative == 50.0
    assert row.std_sample == pytest.approx(math.sqrt(0.02))
    single = summarize([0.0], "EU", "comments")
    assert (single.pct_positive, single.pct_negative, single.std, single.std_sample) == (0.0, 0.0, 0.0, None)
    with pytest.raises(DataError):
        summarize([], "EU", "posts")


def test_summary_threshold_is_inclusive_and_rows_sorted():
    rows = sentiment_summary({"b": [0.05, -0.05, 0.0, 0.04], "a": [0.5]}, "posts")
    assert [r.scope for r in rows] == ["a", "b"]
    assert rows[1].pct_positive == 25.0 and rows[1].pct_negative == 25.0 and rows[1].n == 4


def test_word_frequencies():
    assert word_frequencies(["bike bike lane"]) == [("bike", 2), ("lane", 1)]
    assert word_frequencies(["the a of"], STOP) == []
    assert word_frequencies(TEN_DOCS, STOP) == TEN_DOCS_COUNTS


def test_distribution_examples():
    d = distribution_data([0.0])
    assert d.ecdf == ((0.0, 1.0),) and d.box["median"] == 0.0
    assert distribution_data([-1.0, 1.0], bins=2).counts == (1, 1)
    with pytest.raises(DataError):
        distribution_data([])
    with pytest.raises(ValueError):
        distribution_data([0.1], bins=0)


def test_uniform_ecdf_is_close_to_the_line():
    v = np.random.default_rng(0).uniform(-1, 1, 1000)
    d = distribution_data(v)
    xs = np.array([x for x, _ in d.ecdf])
    fs = np.array([f for _, f in d.ecdf])
    prev = np.concatenate([[0.0], fs[:-1]])
    target = (xs + 1) / 2
    assert max(np.max(np.abs(fs - target)), np.max(np.abs(prev - target))) < 0.06
    assert np.all(np.diff(fs) > 0) and fs[-1] == 1.0
    assert sum(d.counts) == 1000 and len(d.bin_edges) == 41


def test_boxplot_tukey():
    box = boxplot_stats(np.array([1.0, 2, 3, 4, 5, 6, 7, 8, 100]))
    assert (box["q1"], box["median"], box["q3"]) == (3.0, 5.0, 7.0)
    assert box["whisker_high"] == 8.0 and box["whisker_low"] == 1.0 and box["n_outliers"] == 1


def test_format_float():
    assert format_float(0.0) == "0.000000"
    assert format_float(1 / 3) == "0.333333"
    assert format_float(-2.5) == "-2.500000"
    assert format_float(3.2e-9) == "3.200000e-09"
    assert format_float(float("nan")) == "" and format_float(None) == ""


def test_csv_round_trip_and_header_only(tmp_path):
    rows = [summarize([0.3, -0.2, 0.9], "US", "posts"), summarize([0.123456789], "EU", "posts")]
    path = export(rows, tmp_path / "s.csv")
    back = read_csv(path)
    for row, parsed in zip(rows, back):
        assert float(parsed["mean"]) == pytest.approx(row.mean, abs=5e-7)
        assert int(parsed["n"]) == row.n
    assert back[1]["std_sample"] == ""
    raw = path.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")

    empty = export([], tmp_path / "e.csv", columns=["region", "aspect", "n"])
    assert empty.read_text(encoding="utf-8") == "region,aspect,n\n"
    with pytest.raises(ValueError):
        export([], tmp_path / "x.csv")
    with pytest.raises(ValueError):
        export(rows, tmp_path / "x.parquet")


def test_exports_are_byte_identical(tmp_path):
    data = {"b": [1.0, np.float64(2 / 3)], "a": {"n": np.int64(3), "flag": np.bool_(True)},
            "dist": distribution_data([0.2, 0.4])}
    a = export(data, tmp_path / "a.json").read_bytes()
    b = export(data, tmp_path / "b.json").read_bytes()
    assert a == b
    assert to_json({"x": 0.1 + 0.2}) == '{\n  "x": 0.3\n}\n'


def test_unwritable_path_raises(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("", encoding="utf-8")
    with pytest.raises(OSError):
        export([{"a": 1}], blocker / "sub" / "t.csv")


def test_benchmark_rows_report_differences():
    ref = reference_values()
    assert ref["lmm/US/posts/var_city"] == 0.0027
    rows = benchmark_rows({"lmm/US/posts/var_city": 0.0030})
    hit = next(r for r in rows if r["quantity"] == "lmm/US/posts/var_city")
    assert hit["abs_diff"] == pytest.approx(0.0003)
    miss = [r for r in rows if r["computed"] is None]
    assert len(miss) == len(rows) - 1 and all(r["abs_diff"] is None for r in miss)
