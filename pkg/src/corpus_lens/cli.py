"""Command-line pipeline.

Stages and the artifacts they exchange (all under ``outdir``)::

    ingest     -> documents.jsonl, ingest_report.json, rejects.jsonl
    sentiment  -> scores.jsonl
    aspects    -> aspect_summary.csv
    topics     -> topics.json, topic_labels.jsonl
    stats      -> tests/*.json, dunn_<scope>.csv
    lmm        -> lmm_<scope>.json
    report     -> sentiment_summary.csv, wordfreq_<region>.csv,
                  dist_<scope>.json, benchmark.csv

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import math
import os
import platform
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .validation import DataError, NumericError

log = logging.getLogger("corpus_lens")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULT_KEYWORDS = (
    "bike", "bikes", "bicycle", "bicycles", "biking", "cycling", "cyclist", "cyclists",
    "cycle", "lane", "lanes", "trail", "trails", "ride", "riding",
)
REGIONS = ("EU", "US")
KINDS = ("posts", "comments")


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    posts: str | None = None
    comments: str | None = None
    geo_map: str | None = None
    lexicon: str | None = None
    aspect_lexicon: str | None = None
    embeddings: str | None = None
    stopwords: str | None = None
    outdir: str = "corpus_lens_out"
    keywords: list = field(default_factory=lambda: list(DEFAULT_KEYWORDS))
    min_posts_state: int = 30
    min_posts_country_plot: int = 100
    min_comments_for_pair: int = 1
    min_cluster_size: int = 15
    min_samples: int | None = None
    top_k: int = 10
    pca_components: int | None = None
    embedding_dim: int = 256
    threshold: float = 0.05
    bins: int = 40
    seed: int = 0
    threads: int | None = None

    PATH_FIELDS = ("posts", "comments", "geo_map", "lexicon", "aspect_lexicon", "embeddings", "stopwords")

    def validate(self) -> "RunConfig":
        for name in ("min_posts_state", "min_posts_country_plot", "min_comments_for_pair",
                     "min_cluster_size", "top_k", "embedding_dim", "bins"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < (0 if name == "top_k" else 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.min_cluster_size < 2:
            raise ConfigError("min_cluster_size must be at least 2")
        if self.min_samples is not None and (not isinstance(self.min_samples, int) or self.min_samples < 1):
            raise ConfigError("min_samples must be a positive integer or null")
        if self.embedding_dim < 8:
            raise ConfigError("embedding_dim must be at least 8")
        if not isinstance(self.threshold, (int, float)) or not 0 <= self.threshold < 1:
            raise ConfigError("threshold must lie in [0, 1)")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads < 1):
            raise ConfigError("threads must be a positive integer")
        if not self.keywords or not all(isinstance(k, str) for k in self.keywords):
            raise ConfigError("keywords must be a non-empty list of strings")
        for name in self.PATH_FIELDS:
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name}: file not found: {p}")
        return self

    def public(self) -> dict:
        """Config as recorded in the manifest: file names only, no output location."""
        d = dataclasses.asdict(self)
        d.pop("outdir")
        d.pop("threads")
        for name in self.PATH_FIELDS:
            if d[name] is not None:
                d[name] = Path(d[name]).name
        return d


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        raw = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for name in RunConfig.PATH_FIELDS + ("outdir",):
        if raw.get(name) is not None and not Path(raw[name]).is_absolute():
            raw[name] = str((p.parent / raw[name]))
    return raw


# --- artifact helpers -----------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_jsonl(path: Path, rows) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    with path.open("r", encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class Workspace:
    """Output directory plus the stage dependency contract."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.outdir)
        self.root.mkdir(parents=True, exist_ok=True)

    def need(self, name: str, producer: str) -> Path:
        p = self.root / name
        if not p.exists():
            raise ConfigError(f"missing {name}; run the '{producer}' subcommand first")
        return p

    def documents(self) -> list[dict]:
        return _read_jsonl(self.need("documents.jsonl", "ingest"))

    def scores(self) -> dict[str, float]:
        rows = _read_jsonl(self.need("scores.jsonl", "sentiment"))
        return {r["doc_id"]: r["compound"] for r in rows}


@dataclass
class Scored:
    """Documents joined with their compound scores, grouped for analysis."""

    posts: list[dict]
    comments: list[dict]
    compound: dict[str, float]

    @classmethod
    def load(cls, ws: Workspace) -> "Scored":
        compound = ws.scores()
        docs = ws.documents()
        missing = [d["doc_id"] for d in docs if d["doc_id"] not in compound]
        if missing:
            raise ConfigError(f"scores.jsonl lacks {missing[0]!r}; rerun the 'sentiment' subcommand")
        posts = [d for d in docs if d["kind"] == "post"]
        comments = [d for d in docs if d["kind"] == "comment"]
        return cls(posts, comments, compound)

    def comment_means(self) -> dict[str, tuple[int, float]]:
        by_post: dict[str, list[float]] = defaultdict(list)
        for c in self.comments:
            by_post[c["parent_id"]].append(self.compound[c["doc_id"]])
        return {pid: (len(v), math.fsum(v) / len(v)) for pid, v in by_post.items()}

    def region_posts(self, region: str) -> list[dict]:
        return [p for p in self.posts if p["region"] == region]


# --- stages ---------------------------------------------------------------

def stage_ingest(ws: Workspace) -> list[str]:
    from .corpus import Document, keyword_filter, link_threads, load_comments, load_geo_map, load_posts, write_rejects

    cfg = ws.cfg
    if cfg.posts is None:
        raise ConfigError("ingest needs a posts file (--posts or config 'posts')")
    posts = load_posts(cfg.posts)
    comments = load_comments(cfg.comments) if cfg.comments else None
    geo = load_geo_map(cfg.geo_map)

    kept = keyword_filter(posts.records, cfg.keywords)
    mapped, unmapped = [], []
    for p in kept:
        (mapped if geo.get(p.subreddit) else unmapped).append(p)
    threads, orphans = link_threads(mapped, comments.records if comments else ())

    docs = []
    for t in threads:
        g = geo[t.post.subreddit]
        base = dict(region=g.region, unit=g.unit, city=g.city, subreddit=t.post.subreddit)
        docs.append(Document(t.post.id, "post", t.post.text, **base))
        docs.extend(Document(c.comment_id, "comment", c.text, parent_id=t.post.id, **base) for c in t.comments)
    rows = [{k: v for k, v in dataclasses.asdict(d).items() if k != "extra"} for d in docs]
    rows.sort(key=lambda r: (r["kind"] != "post", r["doc_id"]))
    _write_jsonl(ws.root / "documents.jsonl", rows)

    rejects = [dataclasses.replace(r, file=Path(r.file).name)
               for r in list(posts.rejects) + (list(comments.rejects) if comments else [])]
    write_rejects(rejects, ws.root / "rejects.jsonl")

    from .report import export

    known = {p.id for p in posts.records}
    attached = sum(len(t.comments) for t in threads)
    true_orphans = sum(1 for c in orphans if c.parent_id not in known)
    report = {
        "posts": {"lines": posts.total_lines, "valid": len(posts.records), "rejected": len(posts.rejects),
                  "duplicates": posts.duplicates, "keyword_matched": len(kept),
                  "unmapped_subreddit": len(unmapped), "kept": len(mapped)},
        "comments": None if comments is None else {
            "lines": comments.total_lines, "valid": len(comments.records), "rejected": len(comments.rejects),
            "duplicates": comments.duplicates, "attached": attached, "orphans": true_orphans,
            "parent_filtered": len(orphans) - true_orphans,
        },
        "unmapped_subreddits": sorted({p.subreddit for p in unmapped}),
    }
    export(report, ws.root / "ingest_report.json")
    log.info("ingest: %d posts, %d documents, %d rejects", len(mapped), len(rows), len(rejects))
    return ["documents.jsonl", "rejects.jsonl", "ingest_report.json"]


def stage_sentiment(ws: Workspace) -> list[str]:
    from .sentiment import SentimentAnalyzer

    docs = ws.documents()
    analyzer = SentimentAnalyzer(lexicon_path=ws.cfg.lexicon, threshold=ws.cfg.threshold).fit()
    rows = []
    for d, s in zip(docs, analyzer.score_many(d["text"] for d in docs)):
        rows.append({"doc_id": d["doc_id"], "kind": d["kind"], **s.as_dict()})
    _write_jsonl(ws.root / "scores.jsonl", rows)
    return ["scores.jsonl"]


def stage_aspects(ws: Workspace) -> list[str]:
    from .aspects import AspectLexicon, aspect_summary, match_aspects
    from .report import export

    data = Scored.load(ws)
    lexicon = AspectLexicon.load(ws.cfg.aspect_lexicon)
    assignments = [match_aspects(p["text"], lexicon, p["doc_id"]) for p in data.posts]
    region_of = {p["doc_id"]: p["region"] for p in data.posts}
    rows = aspect_summary(assignments, data.compound, region_of)
    export([dataclasses.asdict(r) for r in rows], ws.root / "aspect_summary.csv",
           columns=["region", "aspect", "n", "mean", "median"])
    return ["aspect_summary.csv"]


def stage_topics(ws: Workspace) -> list[str]:
    from .report import export
    from .text import load_stopwords
    from .topics import TopicModel, fallback_embed, load_embeddings

    cfg = ws.cfg
    data = Scored.load(ws)
    stop = load_stopwords(cfg.stopwords)
    supplied = load_embeddings(cfg.embeddings) if cfg.embeddings else None
    out, labels_rows = {}, []
    for region in REGIONS:
        posts = data.region_posts(region)
        if not posts:
            continue
        ids = [p["doc_id"] for p in posts]
        texts = [p["text"] for p in posts]
        if supplied is not None:
            matrix = supplied.subset(ids)
        else:
            matrix = fallback_embed(texts, cfg.embedding_dim, cfg.seed, ids, stopwords=stop)
        model = TopicModel(cfg.min_cluster_size, cfg.min_samples, cfg.top_k, stop,
                           cfg.pca_components, cfg.seed)
        model.fit(matrix, texts, [data.compound[i] for i in ids])
        out[region] = {
            "n_docs": len(ids),
            "n_noise": int(np.count_nonzero(model.labels_ < 0)),
            "embedding_source": "file" if supplied is not None else "hashing",
            "topics": [t.as_dict() for t in model.topics_],
        }
        labels_rows.extend({"doc_id": i, "region": region, "topic": int(t)} for i, t in zip(ids, model.labels_))
    export(out, ws.root / "topics.json")
    _write_jsonl(ws.root / "topic_labels.jsonl", labels_rows)
    return ["topics.json", "topic_labels.jsonl"]


def _test_json(result, **extra) -> dict:
    d = result.as_dict()
    d["notes"] = {**d["notes"], **extra}
    return d


def stage_stats(ws: Workspace) -> list[str]:
    from .report import export
    from .stats import (bh_fdr, dunn_posthoc, eta_squared, kruskal_wallis, ks_two_sample, mann_whitney_u,
                        wilcoxon_signed_rank)

    cfg = ws.cfg
    data = Scored.load(ws)
    tests = ws.root / "tests"
    tests.mkdir(exist_ok=True)
    written: list[str] = []
    means = data.comment_means()

    def emit(name, obj):
        export(obj, tests / f"{name}.json")
        written.append(f"tests/{name}.json")

    # regional contrasts, x = US and y = EU
    by_kind = {
        "posts": {r: [data.compound[p["doc_id"]] for p in data.region_posts(r)] for r in REGIONS},
        "comments": {r: [data.compound[c["doc_id"]] for c in data.comments if c["region"] == r] for r in REGIONS},
    }
    for kind, vals in by_kind.items():
        if vals["US"] and vals["EU"]:
            mw = mann_whitney_u(vals["US"], vals["EU"])
            emit(f"region_{kind}_mwu", _test_json(mw, x="US", y="EU", effect_is="cliffs_delta"))
            emit(f"region_{kind}_ks", _test_json(ks_two_sample(vals["US"], vals["EU"]), x="US", y="EU"))

    for region in REGIONS:
        posts = data.region_posts(region)
        pairs = [(p, means[p["doc_id"]][1]) for p in posts
                 if means.get(p["doc_id"], (0, 0.0))[0] >= cfg.min_comments_for_pair]
        if pairs:
            post_v = np.array([data.compound[p["doc_id"]] for p, _ in pairs])
            comm_v = np.array([m for _, m in pairs])
            try:
                w = wilcoxon_signed_rank(post_v, comm_v)
                emit(f"paired_{region}", _test_json(
                    w, n_paired=len(pairs), median_post=float(np.median(post_v)),
                    median_comment=float(np.median(comm_v))))
            except DataError as exc:
                emit(f"paired_{region}", {"method": "wilcoxon", "skipped": str(exc), "n_paired": len(pairs)})

            by_unit: dict[str, list] = defaultdict(list)
            for (p, m) in pairs:
                by_unit[p["unit"]].append((data.compound[p["doc_id"]], m))
            unit_rows = []
            for unit in sorted(by_unit):
                prs = by_unit[unit]
                if len(prs) < cfg.min_posts_state:
                    continue
                a = np.array([x for x, _ in prs])
                b = np.array([y for _, y in prs])
                try:
                    r = wilcoxon_signed_rank(a, b)
                except DataError:
                    continue
                unit_rows.append({"unit": unit, "n": len(prs), "median_post": float(np.median(a)),
                                  "median_comment": float(np.median(b)), "statistic": r.statistic,
                                  "t_plus": r.notes.get("t_plus"), "p": r.p_value})
            adj = bh_fdr([r["p"] for r in unit_rows]) if unit_rows else []
            for r, q in zip(unit_rows, adj):
                r["p_adjusted"] = float(q)
            emit(f"paired_units_{region}", {"method": "wilcoxon", "adjust": "fdr_bh",
                                            "min_pairs": cfg.min_posts_state, "units": unit_rows})

        kind_values = {
            "posts": [(p["unit"], data.compound[p["doc_id"]]) for p in posts],
            "comments": [(p["unit"], means[p["doc_id"]][1]) for p in posts
                         if means.get(p["doc_id"], (0, 0.0))[0] >= cfg.min_comments_for_pair],
        }
        for kind, pairs_k in kind_values.items():
            groups: dict[str, list[float]] = defaultdict(list)
            for unit, v in pairs_k:
                groups[unit].append(v)
            kept = {u: g for u, g in sorted(groups.items()) if len(g) >= cfg.min_posts_state}
            scope = f"{region}_{kind}"
            if len(kept) < 2:
                emit(f"kruskal_{scope}", {"method": "kruskal_wallis", "skipped":
                                          f"{len(kept)} unit(s) with at least {cfg.min_posts_state} observations"})
                continue
            names = list(kept)
            kw = kruskal_wallis([kept[u] for u in names])
            n_total = sum(len(g) for g in kept.values())
            eta = eta_squared(kw.statistic, len(names), n_total) if n_total > len(names) else None
            res = _test_json(kw, units=names, eta_squared=eta, min_per_unit=cfg.min_posts_state)
            res["effect"] = eta
            emit(f"kruskal_{scope}", res)
            if len(names) >= 3:
                pm = dunn_posthoc([kept[u] for u in names], names)
                rows = []
                for i, u in enumerate(names):
                    row = {"unit": u}
                    row.update({v: float(pm.p_adjusted[i, j]) for j, v in enumerate(names)})
                    rows.append(row)
                export(rows, ws.root / f"dunn_{scope}.csv", columns=["unit"] + names)
                written.append(f"dunn_{scope}.csv")
    return written


def stage_lmm(ws: Workspace) -> list[str]:
    from .lmm import fit_random_intercept
    from .report import export

    cfg = ws.cfg
    data = Scored.load(ws)
    means = data.comment_means()
    written = []
    for region in REGIONS:
        posts = [p for p in data.region_posts(region) if p["city"]]
        sets = {
            "posts": [(p, data.compound[p["doc_id"]]) for p in posts],
            "comments": [(p, means[p["doc_id"]][1]) for p in posts
                         if means.get(p["doc_id"], (0, 0.0))[0] >= cfg.min_comments_for_pair],
        }
        for kind, rows in sets.items():
            if not rows:
                continue
            fit = fit_random_intercept(
                [v for _, v in rows],
                [f'{p["unit"]}/{p["city"]}' for p, _ in rows],
                [p["unit"] for p, _ in rows],
            )
            out = fit.as_dict()
            out["fixed_effect"] = "unit"
            out["random_intercept"] = "city"
            export(out, ws.root / f"lmm_{region}_{kind}.json")
            written.append(f"lmm_{region}_{kind}.json")
    return written


def _benchmark_values(ws: Workspace, summary_rows, aspect_rows) -> dict[str, float]:
    """Computed counterparts of the reference quantities, where available."""
    vals: dict[str, float] = {}
    for r in summary_rows:
        if r.scope in REGIONS:
            for f in ("mean", "std", "pct_positive", "pct_negative"):
                vals[f"sentiment/{r.scope}/{r.kind}/{f}"] = getattr(r, f)
    for r in aspect_rows:
        for f in ("n", "mean", "median"):
            vals[f"aspect/{r['region']}/{r['aspect']}/{f}"] = int(r[f]) if f == "n" else float(r[f])
    tests = ws.root / "tests"

    def load(name):
        p = tests / f"{name}.json"
        return json.loads(p.read_text(encoding="utf-8")) if p.exists() else None

    if (t := load("region_posts_mwu")) is not None:
        vals["region_posts/mwu/U"] = t["statistic"]
    if (t := load("region_posts_ks")) is not None:
        vals["region_posts/ks/D"] = t["statistic"]
    for region in REGIONS:
        if (t := load(f"paired_{region}")) is not None and "statistic" in t:
            vals[f"paired/{region}/n"] = t["notes"]["n_paired"]
            vals[f"paired/{region}/median_post"] = t["notes"]["median_post"]
            vals[f"paired/{region}/median_comment"] = t["notes"]["median_comment"]
            vals[f"paired/{region}/W"] = t["statistic"]
        for kind in KINDS:
            if (t := load(f"kruskal_{region}_{kind}")) is not None and "statistic" in t:
                vals[f"kruskal/{region}/{kind}/H"] = t["statistic"]
                vals[f"kruskal/{region}/{kind}/eta2"] = t["effect"]
                vals[f"kruskal/{region}/{kind}/k"] = t["k"]
                vals[f"kruskal/{region}/{kind}/N"] = t["N"]
            p = ws.root / f"lmm_{region}_{kind}.json"
            if p.exists():
                m = json.loads(p.read_text(encoding="utf-8"))
                for f in ("var_city", "var_resid", "icc"):
                    vals[f"lmm/{region}/{kind}/{f}"] = m[f]
    return {k: v for k, v in vals.items() if v is not None}


def stage_report(ws: Workspace) -> list[str]:
    from .report import benchmark_rows, distribution_data, export, read_csv, sentiment_summary, word_frequencies
    from .text import load_stopwords

    cfg = ws.cfg
    ws.need("tests", "stats")
    aspect_rows = read_csv(ws.need("aspect_summary.csv", "aspects"))
    data = Scored.load(ws)
    written = []

    groups: dict[str, dict[str, list[float]]] = {"posts": defaultdict(list), "comments": defaultdict(list)}
    levels = {}
    for kind, docs in (("posts", data.posts), ("comments", data.comments)):
        for d in docs:
            v = data.compound[d["doc_id"]]
            keys = [(d["region"], "region"), (f'{d["region"]}/{d["unit"]}', "unit")]
            if d["city"]:
                keys.append((f'{d["region"]}/{d["unit"]}/{d["city"]}', "city"))
            for key, level in keys:
                groups[kind][key].append(v)
                levels[key] = level
    summary = []
    for kind in KINDS:
        summary.extend(sentiment_summary(groups[kind], kind, cfg.threshold))
    order = {"region": 0, "unit": 1, "city": 2}
    summary.sort(key=lambda r: (order[levels[r.scope]], r.scope, r.kind))
    export([{"level": levels[r.scope], **r.as_dict()} for r in summary], ws.root / "sentiment_summary.csv",
           columns=["level", "scope", "kind", "n", "mean", "std", "std_sample", "pct_positive", "pct_negative"])
    written.append("sentiment_summary.csv")

    stop = load_stopwords(cfg.stopwords)
    for region in REGIONS:
        posts = data.region_posts(region)
        if not posts:
            continue
        freq = word_frequencies((p["text"] for p in posts), stop)
        export([{"term": t, "count": c} for t, c in freq], ws.root / f"wordfreq_{region}.csv",
               columns=["term", "count"])
        written.append(f"wordfreq_{region}.csv")
        for kind in KINDS:
            values = groups[kind].get(region)
            if values:
                export(distribution_data(values, cfg.bins), ws.root / f"dist_{region}_{kind}.json")
                written.append(f"dist_{region}_{kind}.json")
        units = {k.split("/", 1)[1]: v for k, v in groups["posts"].items()
                 if levels[k] == "unit" and k.startswith(region + "/") and len(v) >= cfg.min_posts_country_plot}
        export({"min_posts": cfg.min_posts_country_plot,
                "units": {u: distribution_data(v, cfg.bins).box | {"n": len(v)} for u, v in sorted(units.items())}},
               ws.root / f"dist_{region}_units.json")
        written.append(f"dist_{region}_units.json")

    computed = _benchmark_values(ws, summary, aspect_rows)
    export(benchmark_rows(computed), ws.root / "benchmark.csv",
           columns=["quantity", "reference", "computed", "abs_diff"])
    written.append("benchmark.csv")
    return written


STAGES: dict[str, Callable[[Workspace], list[str]]] = {
    "ingest": stage_ingest,
    "sentiment": stage_sentiment,
    "aspects": stage_aspects,
    "topics": stage_topics,
    "stats": stage_stats,
    "lmm": stage_lmm,
    "report": stage_report,
}


# --- manifest -------------------------------------------------------------

def _versions() -> dict:
    import scipy
    import sklearn

    return {"corpus_lens": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__, "python": platform.python_version()}


def write_manifest(ws: Workspace, stages_run: Sequence[str]) -> Path:
    cfg = ws.cfg
    inputs = {}
    for name in RunConfig.PATH_FIELDS:
        p = getattr(cfg, name)
        if p is not None:
            inputs[name] = {"file": Path(p).name, "sha256": _sha256(Path(p))}
    artifacts = {}
    for p in sorted(ws.root.rglob("*")):
        if p.is_file() and p.name != "manifest.json":
            artifacts[p.relative_to(ws.root).as_posix()] = _sha256(p)
    manifest_path = ws.root / "manifest.json"
    previous = []
    if manifest_path.exists():
        try:
            previous = json.loads(manifest_path.read_text(encoding="utf-8")).get("stages", [])
        except (json.JSONDecodeError, AttributeError):
            previous = []
    stages = [s for s in STAGES if s in set(previous) | set(stages_run)]
    manifest = {"config": cfg.public(), "inputs": inputs, "versions": _versions(),
                "stages": stages, "artifacts": artifacts}
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest_path


def run(subcommand: str, cfg: RunConfig) -> int:
    """Run one stage (or ``all``) and refresh the manifest. Returns an exit code."""
    cfg.validate()
    ws = Workspace(cfg)
    names = list(STAGES) if subcommand == "all" else [subcommand]
    limiter = None
    if cfg.threads:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=cfg.threads)
    try:
        for name in names:
            log.info("stage %s", name)
            STAGES[name](ws)
    finally:
        if limiter is not None:
            limiter.unregister()
    write_manifest(ws, names)
    return EXIT_OK


# --- argument parsing -----------------------------------------------------

_FLAG_HELP = {
    "posts": "posts JSONL file",
    "comments": "comments JSONL file",
    "geo_map": "subreddit to region/unit/city JSON map (bundled seed map when unset)",
    "lexicon": "sentiment lexicon TSV (bundled when unset)",
    "aspect_lexicon": "aspect keyword JSON (bundled when unset)",
    "embeddings": "document embeddings file (hashing embedder when unset)",
    "stopwords": "stopword list (bundled English list when unset)",
    "outdir": "artifact directory",
    "min_posts_state": "minimum observations per state/country in unit-level tests",
    "min_posts_country_plot": "minimum posts for a unit to get boxplot data",
    "min_comments_for_pair": "minimum comments for a post to enter paired analyses",
    "min_cluster_size": "HDBSCAN minimum cluster size",
    "min_samples": "HDBSCAN neighbourhood size (defaults to min_cluster_size)",
    "top_k": "keywords per topic",
    "pca_components": "project embeddings to this many PCA components before clustering",
    "embedding_dim": "dimension of the fallback hashing embedder",
    "threshold": "polarity cutoff for Positive/Negative",
    "bins": "histogram bins over [-1, 1]",
    "seed": "seed for every stochastic step",
    "threads": "cap on worker threads (env CORPUS_LENS_THREADS)",
}


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    defaults = RunConfig()
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file; flags override it (default: none)")
    for f in dataclasses.fields(RunConfig):
        if f.name == "keywords":
            p.add_argument("--keywords", nargs="+", default=argparse.SUPPRESS,
                           help=f"keyword filter terms (default: {' '.join(DEFAULT_KEYWORDS)})")
            continue
        default = getattr(defaults, f.name)
        kind = {"threshold": float}.get(f.name, int if isinstance(default, int) or f.name in (
            "min_samples", "pca_components", "threads") else str)
        p.add_argument("--" + f.name.replace("_", "-"), dest=f.name, type=kind, default=argparse.SUPPRESS,
                       help=f"{_FLAG_HELP[f.name]} (default: {default})")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                   help="log progress (default: off)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corpus-lens", description="Sentiment, topic and geographic "
                                     "statistics pipeline for discussion corpora.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name in list(STAGES) + ["all"]:
        sp = sub.add_parser(name, help="run every stage" if name == "all" else f"run the {name} stage")
        _add_run_flags(sp)
    gen = sub.add_parser("gen-fixture")  # hidden: not listed in the help summary
    gen.add_argument("--outdir", required=True)
    gen.add_argument("--n-posts", type=int, default=200)
    gen.add_argument("--seed", type=int, default=0)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "gen-fixture"]
    return parser


def config_from_args(ns: argparse.Namespace, env: dict | None = None) -> RunConfig:
    env = os.environ if env is None else env
    values = load_config(getattr(ns, "config", None))
    if "threads" not in values and env.get("CORPUS_LENS_THREADS"):
        try:
            values["threads"] = int(env["CORPUS_LENS_THREADS"])
        except ValueError as exc:
            raise ConfigError("CORPUS_LENS_THREADS must be an integer") from exc
    for f in dataclasses.fields(RunConfig):
        if hasattr(ns, f.name):
            values[f.name] = getattr(ns, f.name)
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if ns.command == "gen-fixture":
            from .synthetic import write_fixture

            paths = write_fixture(ns.outdir, ns.n_posts, ns.seed)
            print(json.dumps({k: str(v) for k, v in paths.items()}, sort_keys=True))
            return EXIT_OK
        return run(ns.command, config_from_args(ns))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
