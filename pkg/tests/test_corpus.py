import json

import pytest

from corpus_lens.corpus import (Comment, GeoMap, Post, keyword_filter, link_threads, load_comments, load_geo_map,
                                load_posts, min_count_filter, write_rejects)
from corpus_lens.text import contains_phrase, load_stopwords, normalize
from corpus_lens.validation import DataError


def _post(pid="p", title="bike lane", selftext="", **kw):
    base = dict(id=pid, subreddit="Portland", title=title, selftext=selftext, author="a",
                created_utc=1.7e9, num_comments=0, score=1, upvote_ratio=0.5)
    base.update(kw)
    return base


def _comment(cid, parent, t=1.0, body="ok"):
    return Comment(comment_id=cid, parent_id=parent, body=body, author="x", created_utc=t, score=1)


def _write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


# --- text -----------------------------------------------------------------------

def test_normalize_splits_on_non_alphanumerics():
    assert normalize("New Bike-Lane on 3rd Ave!") == ["new", "bike", "lane", "on", "3rd", "ave"]
    assert normalize("Cykelstier i København") == ["cykelstier", "i", "københavn"]
    assert normalize("snake_case") == ["snake", "case"]
    assert normalize(None) == [] and normalize("") == []


def test_contains_phrase():
    toks = normalize("the protected bike lane")
    assert contains_phrase(toks, ("bike", "lane"))
    assert not contains_phrase(toks, ("lane", "bike"))
    assert not contains_phrase(toks, ())
    assert not contains_phrase(["bike"], ("bike", "lane"))


def test_stopwords_file(tmp_path):
    f = tmp_path / "sw.txt"
    f.write_text("# comment\nThe\n\nAND\n", encoding="utf-8")
    assert load_stopwords(f) == {"the", "and"}
    assert {"the", "and", "of"} <= load_stopwords()


# --- ingestion ------------------------------------------------------------------

def test_table_row_fields_round_trip(tmp_path):
    row = _post("1ou8czt", num_comments=8, score=42, upvote_ratio=0.94, permalink="/r/x/1ou8czt")
    res = load_posts(_write_lines(tmp_path / "p.jsonl", [json.dumps(row)]))
    assert len(res) == 1 and not res.rejects
    p = res.records[0]
    assert (p.id, p.num_comments, p.score, p.upvote_ratio) == ("1ou8czt", 8, 42, 0.94)
    assert p.source_link == "/r/x/1ou8czt"


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    res = load_posts(path)
    assert len(res) == 0 and res.rejects == () and res.total_lines == 0


def test_invalid_json_is_reported_with_line_number(tmp_path):
    lines = [json.dumps(_post("a")), json.dumps(_post("b")), "{not json", json.dumps(_post("c"))]
    res = load_posts(_write_lines(tmp_path / "p.jsonl", lines))
    assert [p.id for p in res] == ["a", "b", "c"]
    assert len(res.rejects) == 1 and res.rejects[0].line == 3
    assert "invalid JSON" in res.rejects[0].reason
    assert len(res) + len(res.rejects) == res.total_lines


@pytest.mark.parametrize("change, reason", [
    ({"upvote_ratio": 1.5}, "upvote_ratio"),
    ({"num_comments": -1}, "num_comments"),
    ({"score": "12"}, "numeric"),
    ({"score": 1.5}, "integer"),
    ({"created_utc": None}, "missing"),
    ({"id": ""}, "empty id"),
])
def test_field_validation(tmp_path, change, reason):
    res = load_posts(_write_lines(tmp_path / "p.jsonl", [json.dumps({**_post(), **change})]))
    assert len(res) == 0
    assert reason in res.rejects[0].reason


def test_non_object_line_rejected(tmp_path):
    res = load_posts(_write_lines(tmp_path / "p.jsonl", ["[1, 2]"]))
    assert len(res.rejects) == 1


def test_duplicates_last_wins(tmp_path):
    lines = [json.dumps(_post("a", title="first")), json.dumps(_post("a", title="second"))]
    res = load_posts(_write_lines(tmp_path / "p.jsonl", lines))
    assert res.duplicates == 1 and res.records[0].title == "second"


def test_missing_file_raises_io_error(tmp_path):
    with pytest.raises(OSError):
        load_posts(tmp_path / "nope.jsonl")


def test_comments_strip_parent_prefix(tmp_path):
    row = dict(comment_id="c1", parent_id="t3_abc", body="nice", author="u", created_utc=5, score=2)
    res = load_comments(_write_lines(tmp_path / "c.jsonl", [json.dumps(row)]))
    assert res.records[0].parent_id == "abc"


def test_write_rejects(tmp_path):
    res = load_posts(_write_lines(tmp_path / "p.jsonl", ["oops"]))
    out = tmp_path / "rejects.jsonl"
    write_rejects(res.rejects, out)
    rec = json.loads(out.read_text(encoding="utf-8"))
    assert set(rec) == {"file", "line", "reason"} and rec["line"] == 1


def test_post_text_uses_title_when_body_blank():
    p = Post(**{k: v for k, v in _post(title="T", selftext="  ").items()})
    assert p.text == "T"
    assert Post(**_post(title="T", selftext="body")).text == "T body"


# --- threads and filters ----------------------------------------------------------

def test_link_threads_matches_and_orphans():
    posts = [Post(**_post("p"))]
    comments = [_comment("c2", "p", t=5), _comment("c1", "p", t=5), _comment("c0", "p", t=1), _comment("x", "q")]
    threads, orphans = link_threads(posts, comments)
    assert threads[0].comment_ids == ["c0", "c1", "c2"]
    assert [o.comment_id for o in orphans] == ["x"]
    assert sum(len(t.comments) for t in threads) + len(orphans) == len(comments)


def test_link_threads_without_comments():
    threads, orphans = link_threads([Post(**_post("p"))], [])
    assert threads[0].comments == () and orphans == []


def test_keyword_filter_whole_token():
    posts = [Post(**_post("a", title="New bike lane on 3rd Ave")),
             Post(**_post("b", title="I like my motorbike")),
             Post(**_post("c", title="")),
             Post(**_post("d", title="Ride", selftext="Cycling on the trail"))]
    kept = keyword_filter(posts, ["bike"])
    assert [p.id for p in kept] == ["a"]
    assert [p.id for p in keyword_filter(posts, ["bike", "trail"])] == ["a", "d"]
    assert keyword_filter(kept, ["bike"]) == kept
    with pytest.raises(ValueError):
        keyword_filter(posts, ["", "!!"])


def test_min_count_filter_boundary():
    groups = {"A": list(range(30)), "B": list(range(29)), "C": []}
    assert set(min_count_filter(groups, 30)) == {"A"}
    assert set(min_count_filter(groups, 1)) == {"A", "B"}
    once = min_count_filter(groups, 30)
    assert min_count_filter(once, 30) == once
    with pytest.raises(ValueError):
        min_count_filter(groups, 0)


def test_geo_map_case_insensitive_and_validated(tmp_path):
    path = tmp_path / "geo.json"
    path.write_text(json.dumps({"Portland": {"region": "US", "unit": "Oregon", "city": "Portland"},
                                "Germany": {"region": "EU", "unit": "Germany", "city": None}}), encoding="utf-8")
    geo = load_geo_map(path)
    assert isinstance(geo, GeoMap) and len(geo) == 2
    assert geo["portland"].unit == "Oregon" and geo["germany"].city is None
    assert geo.get("nowhere") is None
    path.write_text(json.dumps({"X": {"region": "Asia", "unit": "Y"}}), encoding="utf-8")
    with pytest.raises(DataError, match="region"):
        load_geo_map(path)
    path.write_text(json.dumps({"X": {"region": "US", "unit": ""}}), encoding="utf-8")
    with pytest.raises(DataError, match="unit"):
        load_geo_map(path)


def test_bundled_geo_map_has_both_regions():
    geo = load_geo_map()
    regions = {geo[s].region for s in geo}
    assert regions == {"US", "EU"}
