"""JSONL ingestion of posts and comments, thread linking and inclusion filters."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Generic, Iterable, Mapping, Sequence, TypeVar

from .text import contains_phrase, normalize
from .validation import DataError

T = TypeVar("T")

REGIONS = ("US", "EU")


@dataclass(frozen=True)
class Post:
    id: str
    subreddit: str
    title: str
    selftext: str
    author: str
    created_utc: float
    num_comments: int
    score: int
    upvote_ratio: float
    source_link: str | None = None

    @property
    def text(self) -> str:
        """Analysis text: title alone when the body is empty."""
        if self.selftext and self.selftext.strip():
            return f"{self.title} {self.selftext}"
        return self.title


@dataclass(frozen=True)
class Comment:
    comment_id: str
    parent_id: str
    body: str
    author: str
    created_utc: float
    score: int

    @property
    def text(self) -> str:
        return self.body


@dataclass(frozen=True)
class GeoUnit:
    region: str
    unit: str
    city: str | None
    subreddit: str


@dataclass(frozen=True)
class Thread:
    post: Post
    comments: tuple[Comment, ...] = ()

    @property
    def comment_ids(self) -> list[str]:
        return [c.comment_id for c in self.comments]


@dataclass(frozen=True)
class Reject:
    file: str
    line: int
    reason: str

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LoadResult(Generic[T]):
    records: tuple[T, ...]
    rejects: tuple[Reject, ...] = ()
    duplicates: int = 0
    total_lines: int = 0

    def __iter__(self):
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)


def _require(obj: dict, key: str, kind, *, optional: bool = False, default=None):
    if key not in obj or obj[key] is None:
        if optional:
            return default
        raise DataError(f"missing field {key!r}")
    value = obj[key]
    if kind is str:
        if not isinstance(value, str):
            raise DataError(f"field {key!r} must be a string")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"field {key!r} must be numeric")
    if not math.isfinite(value):
        raise DataError(f"field {key!r} must be finite")
    if kind is int:
        if float(value) != int(value):
            raise DataError(f"field {key!r} must be an integer")
        return int(value)
    return float(value)


def _post_from(obj: dict) -> Post:
    post = Post(
        id=_require(obj, "id", str),
        subreddit=_require(obj, "subreddit", str),
        title=_require(obj, "title", str, optional=True, default=""),
        selftext=_require(obj, "selftext", str, optional=True, default=""),
        author=_require(obj, "author", str, optional=True, default=""),
        created_utc=_require(obj, "created_utc", float),
        num_comments=_require(obj, "num_comments", int),
        score=_require(obj, "score", int),
        upvote_ratio=_require(obj, "upvote_ratio", float),
        source_link=_require(obj, "permalink", str, optional=True),
    )
    if not post.id:
        raise DataError("empty id")
    if not 0.0 <= post.upvote_ratio <= 1.0:
        raise DataError(f"upvote_ratio {post.upvote_ratio} outside [0, 1]")
    if post.num_comments < 0:
        raise DataError("negative num_comments")
    if post.created_utc <= 0:
        raise DataError("created_utc must be positive")
    return post


def _comment_from(obj: dict) -> Comment:
    parent = _require(obj, "parent_id", str)
    if parent.startswith("t3_"):
        parent = parent[3:]
    comment = Comment(
        comment_id=_require(obj, "comment_id", str),
        parent_id=parent,
        body=_require(obj, "body", str, optional=True, default=""),
        author=_require(obj, "author", str, optional=True, default=""),
        created_utc=_require(obj, "created_utc", float),
        score=_require(obj, "score", int),
    )
    if not comment.comment_id:
        raise DataError("empty comment_id")
    if not comment.parent_id:
        raise DataError("empty parent_id")
    return comment


def _load_jsonl(path, build, key) -> LoadResult:
    path = Path(path)
    rejects: list[Reject] = []
    by_id: dict[str, object] = {}
    duplicates = 0
    total = 0
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            total += 1
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise DataError("line is not a JSON object")
                rec = build(obj)
            except json.JSONDecodeError as exc:
                rejects.append(Reject(str(path), lineno, f"invalid JSON: {exc.msg}"))
                continue
            except DataError as exc:
                rejects.append(Reject(str(path), lineno, str(exc)))
                continue
            k = key(rec)
            if k in by_id:
                duplicates += 1
            by_id[k] = rec
    records = tuple(by_id[k] for k in sorted(by_id))
    return LoadResult(records, tuple(rejects), duplicates, total)


def load_posts(path) -> LoadResult[Post]:
    """Read a posts JSONL file.

    Malformed lines are collected in ``rejects`` with their line numbers.
    A repeated id keeps the last record and is counted in ``duplicates``.
    Records come back sorted by id.
    """
    return _load_jsonl(path, _post_from, lambda p: p.id)


def load_comments(path) -> LoadResult[Comment]:
    return _load_jsonl(path, _comment_from, lambda c: c.comment_id)


def write_rejects(rejects: Iterable[Reject], path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for r in rejects:
            fh.write(json.dumps(r.as_dict(), sort_keys=True) + "\n")


class GeoMap(Mapping[str, GeoUnit]):
    """Subreddit to :class:`GeoUnit` lookup, case-insensitive on the name."""

    def __init__(self, entries: Mapping[str, GeoUnit]):
        self._entries = {k.casefold(): v for k, v in entries.items()}

    def __getitem__(self, subreddit: str) -> GeoUnit:
        return self._entries[subreddit.casefold()]

    def __iter__(self):
        return iter(sorted(self._entries))

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, subreddit, default=None):
        return self._entries.get(subreddit.casefold(), default)


def load_geo_map(path=None) -> GeoMap:
    """Read ``{subreddit: {region, unit, city}}`` JSON.

    Without a path the bundled seed map of city and cycling subreddits is used.
    """
    if path is None:
        from importlib import resources

        raw = json.loads(resources.files("corpus_lens.data").joinpath("geo_map_seed.json").read_text("utf-8"))
    else:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise DataError("geo map must be a JSON object keyed by subreddit")
    entries = {}
    for sub, entry in raw.items():
        region = entry.get("region")
        unit = entry.get("unit")
        if region not in REGIONS:
            raise DataError(f"geo map entry {sub!r}: region must be one of {REGIONS}, got {region!r}")
        if not unit:
            raise DataError(f"geo map entry {sub!r}: empty unit")
        entries[sub] = GeoUnit(region=region, unit=unit, city=entry.get("city") or None, subreddit=sub)
    return GeoMap(entries)


def link_threads(posts: Iterable[Post], comments: Iterable[Comment]) -> tuple[list[Thread], list[Comment]]:
    """Attach comments to their parent posts.

    Returns one thread per post (comments ordered by ``created_utc`` then
    ``comment_id``) and the list of comments whose parent is unknown.
    """
    posts = list(posts)
    buckets: dict[str, list[Comment]] = {p.id: [] for p in posts}
    orphans = []
    for c in comments:
        bucket = buckets.get(c.parent_id)
        if bucket is None:
            orphans.append(c)
        else:
            bucket.append(c)
    threads = [
        Thread(p, tuple(sorted(buckets[p.id], key=lambda c: (c.created_utc, c.comment_id))))
        for p in posts
    ]
    return threads, orphans


def keyword_filter(posts: Iterable[Post], keywords: Sequence[str]) -> list[Post]:
    """Keep posts whose title or body contains one of ``keywords`` as whole tokens."""
    phrases = [tuple(normalize(k)) for k in keywords]
    phrases = [p for p in phrases if p]
    if not phrases:
        raise ValueError("keyword_filter needs at least one non-empty keyword")
    kept = []
    for post in posts:
        tokens = normalize(post.text)
        if any(contains_phrase(tokens, p) for p in phrases):
            kept.append(post)
    return kept


def min_count_filter(groups: Mapping[str, Sequence[T]], threshold: int) -> dict[str, Sequence[T]]:
    """Units whose group holds at least ``threshold`` items."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    return {unit: vals for unit, vals in groups.items() if len(vals) >= threshold}


@dataclass(frozen=True)
class Document:
    """A scored unit of text with its geography, as passed between stages."""

    doc_id: str
    kind: str
    text: str
    region: str
    unit: str
    city: str | None
    subreddit: str
    parent_id: str | None = None
    extra: dict = field(default_factory=dict, compare=False)
