"""Text normalization shared by keyword filtering, aspect matching,
topic keywords and word-frequency tables."""

from __future__ import annotations

import re
from importlib import resources
from pathlib import Path

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


def normalize(text: str | None) -> list[str]:
    """Lowercase ``text`` and split it on every non-alphanumeric character.

    >>> normalize("Protected Bike-Lane!")
    ['protected', 'bike', 'lane']
    """
    if not text:
        return []
    return _TOKEN.findall(text.lower())


def contains_phrase(tokens: list[str], phrase: tuple[str, ...]) -> bool:
    """True if ``phrase`` occurs as a contiguous run inside ``tokens``."""
    m = len(phrase)
    if m == 0 or m > len(tokens):
        return False
    first = phrase[0]
    for i in range(len(tokens) - m + 1):
        if tokens[i] == first and tuple(tokens[i:i + m]) == phrase:
            return True
    return False


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a one-word-per-line stopword file; ``#`` lines are comments.

    With no path the bundled English list is used.
    """
    if path is None:
        raw = resources.files("corpus_lens.data").joinpath("stopwords_en.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in raw.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.update(normalize(line))
    return frozenset(words)
