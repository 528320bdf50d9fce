from importlib.resources import files

import pytest

from appcontest.features import FeatureConfig
from appcontest.textmine import ComparativeDictionary, SentimentLexicon

DATA = files("appcontest") / "data"


@pytest.fixture(scope="session")
def lexicon():
    return SentimentLexicon.from_jsonl(DATA / "lexicon.jsonl")


@pytest.fixture(scope="session")
def dictionary():
    return ComparativeDictionary.from_jsonl(DATA / "comparatives.jsonl")


@pytest.fixture(scope="session")
def feature_config(lexicon, dictionary):
    return FeatureConfig(lexicon, dictionary, ("RedBike",), ("BlueBike",))


_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the summary."""
    results = request.config.stash.setdefault(_RESULTS, [])

    def record(number: int, ok: bool, detail: str) -> None:
        results.append((number, ok, detail))
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, [])
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(results):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
