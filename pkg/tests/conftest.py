from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


CRITERIA = {
    1: "frequent itemsets and rule measures equal brute force",
    2: "support scheduler reaches 0.15 at cycle 17",
    3: "two-rule Weka fragment prunes to rule 1",
    4: "printed confidence matches counts",
    5: "rule count non-increasing in confidence",
    6: "pruning properties on random rule sets",
    7: "tessellation equals interval scan",
    8: "hit-pair row count",
    9: "ARFF, fact and XML round trips",
    10: "planted rule survives the full pipeline",
    11: "sweep runs the reference grid with the count columns",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n): test for acceptance criterion n")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n = marker.args[0]
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _outcomes.setdefault(n, []).append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, label in CRITERIA.items():
        results = _outcomes.get(n)
        status = "NOT RUN" if results is None else ("PASS" if all(results) else "FAIL")
        terminalreporter.write_line(f"AC{n:<2} {status:7} {label}")
