import json
import shutil

import pytest

import pipeline_checks as pc
from corpus_lens.cli import EXIT_CONFIG, EXIT_DATA, RunConfig, build_parser, config_from_args, load_config, main
from corpus_lens.cli import ConfigError


def _inputs(synthetic_inputs):
    return ["--posts", str(synthetic_inputs["posts"]), "--comments", str(synthetic_inputs["comments"]),
            "--geo-map", str(synthetic_inputs["geo_map"])]


def test_all_emits_every_artifact(pipeline_run):
    produced = set(pc.tree_digest(pipeline_run))
    assert set(pc.EXPECTED) <= produced


def test_ingest_report_accounts_for_every_line(pipeline_run):
    rep = json.loads((pipeline_run / "ingest_report.json").read_text(encoding="utf-8"))
    posts, comments = rep["posts"], rep["comments"]
    assert posts["valid"] + posts["rejected"] == posts["lines"]
    assert comments["attached"] + comments["orphans"] + comments["parent_filtered"] == comments["valid"]
    rejects = [json.loads(x) for x in (pipeline_run / "rejects.jsonl").read_text(encoding="utf-8").splitlines()]
    assert rejects == [{"file": "posts.jsonl", "line": 4, "reason": rejects[0]["reason"]}]


def test_manifest_contents(pipeline_run):
    man = json.loads((pipeline_run / "manifest.json").read_text(encoding="utf-8"))
    assert man["stages"] == ["ingest", "sentiment", "aspects", "topics", "stats", "lmm", "report"]
    assert set(man["inputs"]) == {"posts", "comments", "geo_map"}
    assert "outdir" not in man["config"] and man["config"]["seed"] == 0
    assert set(man["artifacts"]) == set(pc.tree_digest(pipeline_run)) - {"manifest.json"}


def test_planted_structure_is_recovered(pipeline_run):
    themes = pc.theme_means(pipeline_run)
    means = pc.region_means(pipeline_run)
    for region in ("US", "EU"):
        assert themes[region]["theft"] < 0 < themes[region]["recreation"]
        assert means[(region, "comments")] < means[(region, "posts")]


def test_runs_are_byte_identical(pipeline_run, synthetic_inputs, tmp_path):
    assert main(["all", *_inputs(synthetic_inputs), "--outdir", str(tmp_path / "again")]) == 0
    assert pc.tree_digest(pipeline_run) == pc.tree_digest(tmp_path / "again")


def test_stage_order_is_enforced(synthetic_inputs, tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["stats", "--outdir", out]) == EXIT_CONFIG
    assert "'sentiment'" in capsys.readouterr().err
    assert main(["ingest", *_inputs(synthetic_inputs), "--outdir", out]) == 0
    assert main(["topics", "--outdir", out]) == EXIT_CONFIG
    assert "'sentiment'" in capsys.readouterr().err
    assert main(["sentiment", "--outdir", out]) == 0
    assert main(["report", "--outdir", out]) == EXIT_CONFIG
    assert "'stats'" in capsys.readouterr().err
    for stage in ("aspects", "topics", "stats", "lmm", "report"):
        assert main([stage, "--outdir", out]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text(encoding="utf-8"))
    assert man["stages"] == ["ingest", "sentiment", "aspects", "topics", "stats", "lmm", "report"]


def test_stagewise_equals_all(pipeline_run, synthetic_inputs, tmp_path):
    out = str(tmp_path / "s")
    assert main(["ingest", *_inputs(synthetic_inputs), "--outdir", out]) == 0
    for stage in ("sentiment", "aspects", "topics", "stats", "lmm", "report"):
        assert main([stage, *_inputs(synthetic_inputs), "--outdir", out]) == 0
    assert pc.tree_digest(tmp_path / "s") == pc.tree_digest(pipeline_run)


def test_help_lists_defaults(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["all", "--help"])
    text = capsys.readouterr().out
    defaults = RunConfig()
    for name in ("min_posts_state", "min_cluster_size", "top_k", "bins", "seed", "threshold", "outdir"):
        flag = "--" + name.replace("_", "-")
        assert flag in text
        assert f"(default: {getattr(defaults, name)})" in " ".join(text.split())
    assert "gen-fixture" not in build_parser().format_help()


def test_config_file_and_flag_precedence(tmp_path, synthetic_inputs):
    shutil.copy(synthetic_inputs["posts"], tmp_path / "posts.jsonl")
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"posts": "posts.jsonl", "top_k": 3, "seed": 5}), encoding="utf-8")
    ns = build_parser().parse_args(["ingest", "--config", str(cfg_path), "--seed", "9"])
    cfg = config_from_args(ns, env={})
    assert cfg.posts == str(tmp_path / "posts.jsonl") and cfg.top_k == 3 and cfg.seed == 9
    cfg_path.write_text(json.dumps({"colour": "red"}), encoding="utf-8")
    with pytest.raises(ConfigError, match="unknown config keys: colour"):
        load_config(str(cfg_path))
    cfg_path.write_text("{", encoding="utf-8")
    assert main(["ingest", "--config", str(cfg_path)]) == EXIT_CONFIG


def test_threads_from_environment():
    ns = build_parser().parse_args(["lmm"])
    assert config_from_args(ns, env={"CORPUS_LENS_THREADS": "2"}).threads == 2
    ns = build_parser().parse_args(["lmm", "--threads", "3"])
    assert config_from_args(ns, env={"CORPUS_LENS_THREADS": "2"}).threads == 3
    with pytest.raises(ConfigError):
        config_from_args(build_parser().parse_args(["lmm"]), env={"CORPUS_LENS_THREADS": "many"})


def test_threads_flag_gives_same_outputs(pipeline_run, synthetic_inputs, tmp_path):
    out = tmp_path / "t"
    assert main(["all", *_inputs(synthetic_inputs), "--outdir", str(out), "--threads", "1"]) == 0
    assert pc.tree_digest(out) == pc.tree_digest(pipeline_run)


@pytest.mark.parametrize("argv, code", [
    (["ingest", "--posts", "/no/such/file.jsonl"], EXIT_CONFIG),
    (["ingest", "--min-cluster-size", "1"], EXIT_CONFIG),
    (["ingest"], EXIT_CONFIG),
])
def test_config_errors_exit_2(argv, code, tmp_path):
    assert main(argv + ["--outdir", str(tmp_path)]) == code


def test_bad_geo_map_exits_3(synthetic_inputs, tmp_path):
    bad = tmp_path / "geo.json"
    bad.write_text(json.dumps({"x": {"region": "Mars", "unit": "y"}}), encoding="utf-8")
    argv = ["ingest", "--posts", str(synthetic_inputs["posts"]), "--geo-map", str(bad), "--outdir", str(tmp_path)]
    assert main(argv) == EXIT_DATA


def test_gen_fixture(tmp_path, capsys):
    assert main(["gen-fixture", "--outdir", str(tmp_path / "f"), "--n-posts", "40", "--seed", "2"]) == 0
    paths = json.loads(capsys.readouterr().out)
    assert set(paths) == {"posts", "comments", "geo_map"}
    assert sum(1 for _ in open(paths["posts"], encoding="utf-8")) == 41  # one deliberately broken line


def test_constant_sentiment_exits_4(tmp_path):
    posts = tmp_path / "posts.jsonl"
    geo = tmp_path / "geo.json"
    cities = {"Alpha": ("Oregon", "Portland"), "Beta": ("Oregon", "Eugene"), "Gamma": ("Texas", "Austin")}
    geo.write_text(json.dumps({s: {"region": "US", "unit": u, "city": c} for s, (u, c) in cities.items()}),
                   encoding="utf-8")
    with posts.open("w", encoding="utf-8") as fh:
        for i in range(30):
            fh.write(json.dumps({"id": f"p{i}", "subreddit": list(cities)[i % 3], "title": "bike lane",
                                 "selftext": "", "author": "a", "created_utc": 1.7e9 + i, "num_comments": 0,
                                 "score": 1, "upvote_ratio": 0.5}) + "\n")
    argv = ["all", "--posts", str(posts), "--geo-map", str(geo), "--outdir", str(tmp_path / "o")]
    assert main(argv) == 4
