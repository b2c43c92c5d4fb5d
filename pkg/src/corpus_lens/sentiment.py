"""Lexicon- and rule-based sentiment scoring.

The engine follows the VADER scoring procedure (Hutto & Gilbert, 2014):
token valences from a human-rated lexicon, adjusted for negation, degree
modifiers, capitalization, punctuation emphasis and contrastive "but",
then squashed into a compound score in [-1, 1].
"""

from __future__ import annotations

import functools
import math
import string
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

# Published rule constants of the reference method.
ALPHA = 15.0
B_INCR = 0.293
B_DECR = -0.293
C_INCR = 0.733
N_SCALAR = -0.74
BUT_BEFORE = 0.5
BUT_AFTER = 1.5
EXCLAMATION_WEIGHT = 0.292
EXCLAMATION_CAP = 4
QUESTION_WEIGHT = 0.18
QUESTION_CAP_VALUE = 0.96
POLARITY_THRESHOLD = 0.05

NEGATIONS = frozenset([
    "aint", "arent", "cannot", "cant", "couldnt", "darent", "didnt", "doesnt",
    "ain't", "aren't", "can't", "couldn't", "daren't", "didn't", "doesn't",
    "dont", "hadnt", "hasnt", "havent", "isnt", "mightnt", "mustnt", "neither",
    "don't", "hadn't", "hasn't", "haven't", "isn't", "mightn't", "mustn't",
    "neednt", "needn't", "never", "none", "nope", "nor", "not", "nothing", "nowhere",
    "oughtnt", "shant", "shouldnt", "uhuh", "wasnt", "werent",
    "oughtn't", "shan't", "shouldn't", "uh-uh", "wasn't", "weren't",
    "without", "wont", "wouldnt", "won't", "wouldn't", "rarely", "seldom", "despite",
])

_INCREMENTS = (
    "absolutely amazingly awfully completely considerable considerably decidedly deeply "
    "effing enormous enormously entirely especially exceptional exceptionally extreme "
    "extremely fabulously flipping flippin frackin fracking fricking frickin frigging "
    "friggin fully fuckin fucking fuggin fugging greatly hella highly hugely incredible "
    "incredibly intensely major majorly more most particularly purely quite really "
    "remarkably so substantially thoroughly total totally tremendous tremendously uber "
    "unbelievably unusually utter utterly very"
).split()
_DECREMENTS = [
    "almost", "barely", "hardly", "just enough", "kind of", "kinda", "kindof", "kind-of",
    "less", "little", "marginal", "marginally", "occasional", "occasionally", "partly",
    "scarce", "scarcely", "slight", "slightly", "somewhat", "sort of", "sorta", "sortof",
    "sort-of",
]
BOOSTERS: dict[str, float] = {w: B_INCR for w in _INCREMENTS} | {w: B_DECR for w in _DECREMENTS}

# Idioms whose valence replaces that of the lexicon word they contain.
SPECIAL_CASES: dict[str, float] = {
    "the shit": 3, "the bomb": 3, "bad ass": 1.5, "badass": 1.5, "bus stop": 0.0,
    "yeah right": -2, "kiss of death": -1.5, "to die for": 3, "beating heart": 3.5,
}


class Polarity(str, Enum):
    POSITIVE = "Positive"
    NEUTRAL = "Neutral"
    NEGATIVE = "Negative"


@dataclass(frozen=True)
class Lexicon:
    """Token valences plus the modifier tables used by the rules.

    Lookups are case-insensitive because every query is lowercased first.
    """

    valence: Mapping[str, float]
    boosters: Mapping[str, float] = field(default_factory=lambda: dict(BOOSTERS))
    negations: frozenset = NEGATIONS
    special_cases: Mapping[str, float] = field(default_factory=lambda: dict(SPECIAL_CASES))
    source: str = ""

    @classmethod
    def from_tsv(cls, path: str | Path | None = None) -> "Lexicon":
        """Parse ``token<TAB>mean<TAB>stddev<TAB>raw_ratings`` lines.

        Only the mean is used; the other columns must still be present.
        """
        if path is None:
            text = resources.files("corpus_lens.data").joinpath("vader_lexicon.tsv").read_text("utf-8")
            source = "bundled:vader_lexicon.tsv"
        else:
            text = Path(path).read_text(encoding="utf-8")
            source = str(path)
        valence: dict[str, float] = {}
        for lineno, line in enumerate(text.split("\n"), start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) < 2:
                raise ValueError(f"{source}:{lineno}: expected tab-separated token and valence")
            token, mean = parts[0], float(parts[1])
            if math.isnan(mean):
                raise ValueError(f"{source}:{lineno}: NaN valence for {token!r}")
            if len(parts) > 2 and parts[2]:
                float(parts[2])
            valence[token] = mean
        return cls(valence=valence, source=source)

    def __contains__(self, token: str) -> bool:
        return token in self.valence

    def __len__(self) -> int:
        return len(self.valence)


@functools.lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    return Lexicon.from_tsv()


@dataclass(frozen=True)
class SentimentScore:
    neg: float
    neu: float
    pos: float
    compound: float
    polarity: Polarity

    def as_dict(self) -> dict:
        return {"neg": self.neg, "neu": self.neu, "pos": self.pos,
                "compound": self.compound, "polarity": self.polarity.value}


def classify(compound: float, threshold: float = POLARITY_THRESHOLD) -> Polarity:
    """Map a compound score to a polarity; both boundaries are inclusive."""
    if not (-1.0 <= compound <= 1.0) or math.isnan(compound):
        raise ValueError(f"compound score must lie in [-1, 1], got {compound!r}")
    if compound >= threshold:
        return Polarity.POSITIVE
    if compound <= -threshold:
        return Polarity.NEGATIVE
    return Polarity.NEUTRAL


def normalize_score(score: float, alpha: float = ALPHA) -> float:
    norm = score / math.sqrt(score * score + alpha)
    return min(1.0, max(-1.0, norm))


def _strip_punc_if_word(token: str) -> str:
    # Short remnants are most likely emoticons such as ":)" and are kept whole.
    stripped = token.strip(string.punctuation)
    return token if len(stripped) <= 2 else stripped


def _is_negation(word: str, negations: frozenset) -> bool:
    return word in negations or "n't" in word


def _punctuation_emphasis(text: str) -> float:
    ep = min(text.count("!"), EXCLAMATION_CAP) * EXCLAMATION_WEIGHT
    qm_count = text.count("?")
    qm = 0.0
    if qm_count > 1:
        qm = qm_count * QUESTION_WEIGHT if qm_count <= 3 else QUESTION_CAP_VALUE
    return ep + qm


class _Scorer:
    """Single-document scoring state; not shared between documents."""

    def __init__(self, tokens: list[str], lexicon: Lexicon):
        self.tokens = tokens
        self.lower = [t.lower() for t in tokens]
        self.lex = lexicon
        n_caps = sum(1 for t in tokens if t.isupper())
        self.cap_diff = 0 < len(tokens) - n_caps < len(tokens)

    def scalar(self, word: str, valence: float) -> float:
        scalar = self.lex.boosters.get(word.lower(), 0.0)
        if scalar == 0.0:
            return 0.0
        if valence < 0:
            scalar = -scalar
        if word.isupper() and self.cap_diff:
            scalar += C_INCR if valence > 0 else -C_INCR
        return scalar

    def valence(self, i: int) -> float:
        low, lex = self.lower, self.lex.valence
        item = low[i]
        if item not in lex:
            return 0.0
        v = lex[item]
        # "no" directly before a lexicon word negates that word instead of scoring itself
        if item == "no" and i != len(low) - 1 and low[i + 1] in lex:
            v = 0.0
        if (i > 0 and low[i - 1] == "no") or (i > 1 and low[i - 2] == "no") or (
            i > 2 and low[i - 3] == "no" and low[i - 1] in ("or", "nor")
        ):
            v = lex[item] * N_SCALAR
        if self.tokens[i].isupper() and self.cap_diff:
            v += C_INCR if v > 0 else -C_INCR

        for dist in range(3):
            j = i - (dist + 1)
            if j < 0 or low[j] in lex:
                continue
            s = self.scalar(self.tokens[j], v)
            if s != 0:
                s *= (1.0, 0.95, 0.9)[dist]
            v = self.negation(v + s, dist, i)
            if dist == 2:
                v = self.idioms(v, i)
        return self.least(v, i)

    def negation(self, v: float, dist: int, i: int) -> float:
        low, neg = self.lower, self.lex.negations
        if dist == 0:
            if _is_negation(low[i - 1], neg):
                v *= N_SCALAR
        elif dist == 1:
            if low[i - 2] == "never" and low[i - 1] in ("so", "this"):
                v *= 1.25
            elif low[i - 2] == "without" and low[i - 1] == "doubt":
                pass
            elif _is_negation(low[i - 2], neg):
                v *= N_SCALAR
        else:
            # operator grouping reproduces the reference rule exactly
            if (low[i - 3] == "never" and low[i - 2] in ("so", "this")) or low[i - 1] in ("so", "this"):
                v *= 1.25
            elif low[i - 3] == "without" and (low[i - 2] == "doubt" or low[i - 1] == "doubt"):
                pass
            elif _is_negation(low[i - 3], neg):
                v *= N_SCALAR
        return v

    def idioms(self, v: float, i: int) -> float:
        low, special = self.lower, self.lex.special_cases
        one_zero = f"{low[i - 1]} {low[i]}"
        two_one_zero = f"{low[i - 2]} {low[i - 1]} {low[i]}"
        two_one = f"{low[i - 2]} {low[i - 1]}"
        three_two_one = f"{low[i - 3]} {low[i - 2]} {low[i - 1]}"
        three_two = f"{low[i - 3]} {low[i - 2]}"
        for seq in (one_zero, two_one_zero, two_one, three_two_one, three_two):
            if seq in special:
                v = special[seq]
                break
        if len(low) - 1 > i:
            zero_one = f"{low[i]} {low[i + 1]}"
            if zero_one in special:
                v = special[zero_one]
        if len(low) - 1 > i + 1:
            zero_one_two = f"{low[i]} {low[i + 1]} {low[i + 2]}"
            if zero_one_two in special:
                v = special[zero_one_two]
        for ngram in (three_two_one, three_two, two_one):
            if ngram in self.lex.boosters:
                v += self.lex.boosters[ngram]
        return v

    def least(self, v: float, i: int) -> float:
        low, lex = self.lower, self.lex.valence
        if i > 1 and low[i - 1] not in lex and low[i - 1] == "least":
            if low[i - 2] not in ("at", "very"):
                v *= N_SCALAR
        elif i > 0 and low[i - 1] not in lex and low[i - 1] == "least":
            v *= N_SCALAR
        return v

    def sentiments(self) -> list[float]:
        out: list[float] = []
        low = self.lower
        for i, item in enumerate(low):
            if item in self.lex.boosters:
                out.append(0.0)
            elif item == "kind" and i < len(low) - 1 and low[i + 1] == "of":
                out.append(0.0)
            else:
                out.append(self.valence(i))
        return self.but_weights(out)

    def but_weights(self, sentiments: list[float]) -> list[float]:
        if "but" not in self.lower:
            return sentiments
        bi = self.lower.index("but")
        # The reference locates each entry by value (list.index) rather than
        # by position; kept so that scores agree on repeated valences.
        for value in sentiments:
            si = sentiments.index(value)
            if si < bi:
                sentiments[si] = value * BUT_BEFORE
            elif si > bi:
                sentiments[si] = value * BUT_AFTER
        return sentiments


def polarity_scores(text: str, lexicon: Lexicon | None = None,
                    threshold: float = POLARITY_THRESHOLD, alpha: float = ALPHA) -> SentimentScore:
    """Score one document.

    Returns neg/neu/pos proportions and the compound score; an input
    without tokens scores 0 everywhere.
    """
    lexicon = lexicon or default_lexicon()
    text = (text or "").strip()
    tokens = [_strip_punc_if_word(w) for w in text.split()]
    if not tokens:
        return SentimentScore(0.0, 0.0, 0.0, 0.0, Polarity.NEUTRAL)

    sentiments = _Scorer(tokens, lexicon).sentiments()
    total = float(sum(sentiments))
    emphasis = _punctuation_emphasis(text)
    if total > 0:
        total += emphasis
    elif total < 0:
        total -= emphasis
    compound = normalize_score(total, alpha)

    pos_sum = neg_sum = 0.0
    neu_count = 0
    for s in sentiments:
        if s > 0:
            pos_sum += s + 1
        elif s < 0:
            neg_sum += s - 1
        else:
            neu_count += 1
    if pos_sum > abs(neg_sum):
        pos_sum += emphasis
    elif pos_sum < abs(neg_sum):
        neg_sum -= emphasis
    denom = pos_sum + abs(neg_sum) + neu_count
    return SentimentScore(
        neg=abs(neg_sum / denom),
        neu=abs(neu_count / denom),
        pos=abs(pos_sum / denom),
        compound=compound,
        polarity=classify(compound, threshold),
    )


class SentimentAnalyzer(TransformerMixin, BaseEstimator):
    """Scikit-learn transformer wrapping :func:`polarity_scores`.

    ``transform`` maps an iterable of strings to an ``(n, 4)`` array with
    columns ``neg, neu, pos, compound``.

    Parameters
    ----------
    lexicon_path : str or None
        TSV lexicon; the bundled reference lexicon when None.
    threshold : float
        Symmetric polarity cutoff used by :meth:`classify`.
    alpha : float
        Normalization constant of the compound score.
    """

    columns = ("neg", "neu", "pos", "compound")

    def __init__(self, lexicon_path=None, threshold=POLARITY_THRESHOLD, alpha=ALPHA):
        self.lexicon_path = lexicon_path
        self.threshold = threshold
        self.alpha = alpha

    def fit(self, X=None, y=None):
        self.lexicon_ = default_lexicon() if self.lexicon_path is None else Lexicon.from_tsv(self.lexicon_path)
        self.n_lexicon_entries_ = len(self.lexicon_)
        return self

    def _lex(self) -> Lexicon:
        if not hasattr(self, "lexicon_"):
            self.fit()
        return self.lexicon_

    def score(self, text: str) -> SentimentScore:  # noqa: D401 - not an sklearn metric
        """Full :class:`SentimentScore` for a single text."""
        return polarity_scores(text, self._lex(), self.threshold, self.alpha)

    def score_many(self, texts: Iterable[str]) -> list[SentimentScore]:
        lex = self._lex()
        return [polarity_scores(t, lex, self.threshold, self.alpha) for t in texts]

    def transform(self, X) -> np.ndarray:
        scores = self.score_many(X)
        out = np.zeros((len(scores), 4))
        for i, s in enumerate(scores):
            out[i] = (s.neg, s.neu, s.pos, s.compound)
        return out

    def classify(self, compound: float) -> Polarity:
        return classify(compound, self.threshold)


def mean_comment_sentiment(comment_ids: Iterable[str], compound_by_id: Mapping[str, float]) -> float | None:
    """Mean compound over a thread's comments, or None when it has none."""
    values = [compound_by_id[c] for c in comment_ids]
    if not values:
        return None
    return math.fsum(values) / len(values)
