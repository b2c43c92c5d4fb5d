import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def sentiment_reference():
    with (FIXTURES / "sentiment_reference.jsonl").open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


@pytest.fixture(scope="session")
def synthetic_inputs(tmp_path_factory):
    from corpus_lens.synthetic import write_fixture

    return write_fixture(tmp_path_factory.mktemp("synthetic"))


@pytest.fixture(scope="session")
def pipeline_run(synthetic_inputs, tmp_path_factory):
    """One full ``all`` run on the synthetic corpus, shared by CLI tests."""
    from corpus_lens.cli import main

    out = tmp_path_factory.mktemp("run")
    code = main(["all", "--posts", str(synthetic_inputs["posts"]), "--comments",
                 str(synthetic_inputs["comments"]), "--geo-map", str(synthetic_inputs["geo_map"]),
                 "--outdir", str(out)])
    assert code == 0
    return out


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if not test_acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, 10):
        terminalreporter.write_line(test_acceptance.format_line(n, test_acceptance.RESULTS.get(n)))
