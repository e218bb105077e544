from __future__ import annotations

from pathlib import Path

import pytest

from seo.corpus import read_corpus
from seo.ontology import default_registry

FIXTURES = Path(__file__).parent / "fixtures"

_criteria: dict[str, tuple[int, str]] = {}
_outcomes: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_collection_modifyitems(config, items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    if report.failed:
        _outcomes[report.nodeid] = "failed"
    elif report.skipped:
        _outcomes.setdefault(report.nodeid, "skipped")
    elif report.when == "call":
        _outcomes.setdefault(report.nodeid, "passed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    by_number: dict[int, tuple[str, list[str]]] = {}
    for nodeid, (number, title) in _criteria.items():
        by_number.setdefault(number, (title, []))[1].append(_outcomes.get(nodeid, "not run"))
    terminalreporter.section("acceptance criteria")
    for number in sorted(by_number):
        title, outcomes = by_number[number]
        if "failed" in outcomes:
            verdict = "FAIL"
        elif all(o == "skipped" for o in outcomes):
            verdict = "SKIP"
        elif all(o in ("passed", "skipped") for o in outcomes):
            verdict = "PASS"
        else:
            verdict = "NOT RUN"
        terminalreporter.write_line(f"criterion {number:>2} {verdict:<4} {title}")


@pytest.fixture(scope="session")
def registry():
    return default_registry()


@pytest.fixture(scope="session")
def tiny():
    return read_corpus(FIXTURES / "tiny.jsonl")


@pytest.fixture(scope="session")
def engagement_corpus():
    return read_corpus(FIXTURES / "engagement.jsonl")


@pytest.fixture
def fixtures_dir():
    return FIXTURES
