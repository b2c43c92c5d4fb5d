import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpus_lens.aspects import ASPECTS, AspectAssignment, AspectLexicon, AspectMatcher, aspect_summary, match_aspects

LABELS = Path(__file__).parent / "fixtures" / "aspect_labels.jsonl"


@pytest.fixture(scope="module")
def lexicon():
    return AspectLexicon.load()


def _tiny(**extra):
    mapping = {a: [] for a in ASPECTS}
    mapping.update(extra)
    return AspectLexicon.from_mapping(mapping)


def test_hand_labelled_posts(lexicon):
    rows = [json.loads(line) for line in LABELS.read_text(encoding="utf-8").splitlines()]
    assert len(rows) == 20
    for r in rows:
        assert match_aspects(r["text"], lexicon, r["doc_id"]).aspects == set(r["aspects"]), r["text"]


def test_multi_assignment_with_small_lexicon():
    lex = _tiny(**{"protected lanes": ["protected lane", "protected bike lane"], "bike lanes (general)": ["bike lane"]})
    got = match_aspects("new protected bike lane", lex).aspects
    assert got == {"protected lanes", "bike lanes (general)"}
    assert match_aspects("lost my saddle bag", lex).aspects == frozenset()


def test_phrases_match_tokens_not_substrings():
    lex = _tiny(**{"bike lanes (general)": ["lane"]})
    assert not match_aspects("slanes and planes", lex).aspects
    assert match_aspects("Lane-closure", lex).aspects == {"bike lanes (general)"}


def test_lexicon_must_have_nine_aspects():
    with pytest.raises(ValueError, match="missing"):
        AspectLexicon.from_mapping({"protected lanes": ["x"]})
    with pytest.raises(ValueError, match="extra"):
        AspectLexicon.from_mapping({**{a: [] for a in ASPECTS}, "weather": ["rain"]})


def test_user_lexicon_file(tmp_path):
    path = tmp_path / "lex.json"
    mapping = {a: (["painted"] if a == "painted lanes" else []) for a in ASPECTS}
    path.write_text(json.dumps(mapping), encoding="utf-8")
    m = AspectMatcher(lexicon_path=str(path)).fit()
    X = m.transform(["Painted it blue", "protected lane"])
    assert X.shape == (2, 9) and X[0].tolist() == [0, 1, 0, 0, 0, 0, 0, 0, 0] and X[1].sum() == 0
    assert list(m.get_feature_names_out()) == list(ASPECTS)


def test_summary_rows():
    assign = [AspectAssignment("a", frozenset({"painted lanes"})),
              AspectAssignment("b", frozenset({"painted lanes", "paths and trails"})),
              AspectAssignment("c", frozenset()),
              AspectAssignment("d", frozenset({"paths and trails"}))]
    sent = {"a": 0.1, "b": 0.3, "c": 0.9, "d": -0.5}
    region = {"a": "US", "b": "US", "c": "US", "d": "EU"}
    rows = aspect_summary(assign, sent, region)
    assert [(r.region, r.aspect, r.n) for r in rows] == [
        ("EU", "paths and trails", 1), ("US", "painted lanes", 2), ("US", "paths and trails", 1)]
    painted = rows[1]
    assert painted.mean == pytest.approx(0.2) and painted.median == pytest.approx(0.2)
    with pytest.raises(KeyError):
        aspect_summary([AspectAssignment("zz", frozenset({"painted lanes"}))], sent, region)


def test_even_median_is_midpoint():
    assign = [AspectAssignment(str(i), frozenset({"painted lanes"})) for i in range(4)]
    sent = {"0": 0.9, "1": -0.2, "2": 0.4, "3": 0.0}
    row = aspect_summary(assign, sent, dict.fromkeys(sent, "EU"))[0]
    assert row.median == pytest.approx(0.2)


texts = st.lists(st.sampled_from(["protected", "bike", "lane", "trail", "bus", "the", "a", "road", "lock", "paint"]),
                 max_size=12).map(" ".join)


@settings(max_examples=150, deadline=None)
@given(texts, st.sampled_from(ASPECTS), st.sampled_from(["bike", "the road", "paint", "trail bus"]))
def test_adding_a_keyword_never_removes_an_assignment(text, aspect, phrase):
    base = AspectLexicon.load()
    mapping = {a: [" ".join(p) for p in base.phrases[a]] for a in ASPECTS}
    mapping[aspect] = mapping[aspect] + [phrase]
    assert match_aspects(text, base).aspects <= match_aspects(text, AspectLexicon.from_mapping(mapping)).aspects


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(texts, st.sampled_from(["US", "EU"]), st.floats(-1, 1)), min_size=1, max_size=30))
def test_summary_conservation(docs):
    lex = AspectLexicon.load()
    assign = [match_aspects(t, lex, f"d{i}") for i, (t, _, _) in enumerate(docs)]
    sent = {f"d{i}": s for i, (_, _, s) in enumerate(docs)}
    region = {f"d{i}": r for i, (_, r, _) in enumerate(docs)}
    rows = aspect_summary(assign, sent, region)
    assigned = sum(1 for a in assign if a.aspects)
    assert sum(r.n for r in rows) >= assigned
    for r in rows:
        expected = [a for a in assign if r.aspect in a.aspects and region[a.doc_id] == r.region]
        assert r.n == len(expected)
        assert np.min([sent[a.doc_id] for a in expected]) - 1e-12 <= r.mean

