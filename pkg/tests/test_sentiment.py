import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import sentiment_props as props
from corpus_lens.sentiment import (Lexicon, Polarity, SentimentAnalyzer, classify, mean_comment_sentiment,
                                   normalize_score, polarity_scores)


def test_reference_fixture_compound(sentiment_reference):
    assert len(sentiment_reference) == 50
    worst = max(abs(polarity_scores(r["text"]).compound - r["compound"]) for r in sentiment_reference)
    assert worst <= 1e-4


def test_reference_fixture_proportions(sentiment_reference):
    for r in sentiment_reference:
        s = polarity_scores(r["text"])
        for key in ("neg", "neu", "pos"):
            assert getattr(s, key) == pytest.approx(r[key], abs=1e-3), (r["text"], key)


def test_normalization_formula():
    assert normalize_score(0.0) == 0.0
    assert normalize_score(1.0) == pytest.approx(1 / math.sqrt(16))
    assert normalize_score(1e6) == pytest.approx(1.0)
    assert normalize_score(-3.0) == -normalize_score(3.0)


def test_empty_and_whitespace_text():
    for text in ("", "   ", None):
        s = polarity_scores(text)
        assert (s.neg, s.neu, s.pos, s.compound) == (0, 0, 0, 0)
        assert s.polarity is Polarity.NEUTRAL


def test_classify_boundaries_are_inclusive():
    assert classify(0.05) is Polarity.POSITIVE
    assert classify(-0.05) is Polarity.NEGATIVE
    assert classify(0.0499) is Polarity.NEUTRAL
    assert classify(-0.0499) is Polarity.NEUTRAL
    assert classify(0.2, threshold=0.3) is Polarity.NEUTRAL
    with pytest.raises(ValueError):
        classify(1.5)
    with pytest.raises(ValueError):
        classify(float("nan"))


def test_rules_on_small_examples():
    good = polarity_scores("the lane is good").compound
    assert polarity_scores("the lane is not good").compound < 0 < good
    assert polarity_scores("the lane is very good").compound > good
    assert polarity_scores("the lane is GOOD").compound > good
    assert polarity_scores("the lane is good!").compound > good
    # clause after "but" dominates
    assert polarity_scores("the lane is good but the drivers are awful").compound < 0


def test_exclamation_cap():
    four = polarity_scores("good!!!!").compound
    assert polarity_scores("good!!!!!!!").compound == four
    assert polarity_scores("good!!!").compound < four


def test_analyzer_transform_shape_and_params(tmp_path):
    an = SentimentAnalyzer()
    X = an.fit().transform(["great ride", "awful crash", "a bike"])
    assert X.shape == (3, 4)
    assert X[0, 3] > 0 > X[1, 3] and X[2, 3] == 0
    assert an.get_params() == {"lexicon_path": None, "threshold": 0.05, "alpha": 15}
    assert an.classify(0.3) is Polarity.POSITIVE

    lex = tmp_path / "tiny.tsv"
    lex.write_text("zoomy\t2.0\t0.5\t[2, 2]\n", encoding="utf-8")
    custom = SentimentAnalyzer(lexicon_path=str(lex)).fit()
    assert custom.n_lexicon_entries_ == 1
    assert custom.score("zoomy").compound > 0
    assert custom.score("great").compound == 0


def test_lexicon_from_tsv_rejects_garbage(tmp_path):
    bad = tmp_path / "bad.tsv"
    bad.write_text("word\tnot-a-number\n", encoding="utf-8")
    with pytest.raises(ValueError):
        Lexicon.from_tsv(bad)


def test_mean_comment_sentiment():
    assert mean_comment_sentiment([], {}) is None
    assert mean_comment_sentiment(["a", "b"], {"a": 0.5, "b": -0.1}) == pytest.approx(0.2)


def test_random_sequences_satisfy_rule_monotonicity():
    assert props.run_all(2000, seed=7) == 2000


words = st.sampled_from(props.VOCAB)
marks = st.sampled_from(["", "!", "?", ".", ","])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(words, marks), max_size=15), st.booleans())
def test_scores_are_bounded(pieces, shout):
    text = " ".join(w.upper() if shout and i % 3 == 0 else w + m for i, (w, m) in enumerate(pieces))
    props.check_bounds(text)
    s = polarity_scores(text)
    assert s.polarity is classify(s.compound)


@settings(max_examples=200, deadline=None)
@given(st.lists(words, max_size=10), st.sampled_from(props.POSITIVE))
def test_negation_never_raises_positive_word(prefix, word):
    props.check_negation(" ".join(prefix), word)


@settings(max_examples=200, deadline=None)
@given(st.lists(words, max_size=10), st.sampled_from(props.POSITIVE + props.NEGATIVE))
def test_booster_pushes_in_word_direction(prefix, word):
    positive = word in set(props.POSITIVE)
    props.check_booster(" ".join(prefix), word, positive)


@settings(max_examples=200, deadline=None)
@given(st.lists(words, min_size=1, max_size=10))
def test_exclamation_never_lowers_magnitude(seq):
    props.check_exclamation(" ".join(seq))


def test_transform_is_deterministic():
    texts = [" ".join(t.split()[::-1]) for t in props.random_sequences(50, seed=3)]
    a = SentimentAnalyzer().transform(texts)
    b = SentimentAnalyzer().transform(texts)
    assert np.array_equal(a, b)
