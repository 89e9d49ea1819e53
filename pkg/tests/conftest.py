"""Shared pytest plumbing.

The acceptance tests record one verdict per numbered criterion; a terminal
summary section prints them as a single PASS/FAIL line each so the whole
gate is readable at a glance even inside a long pytest run.
"""

import pytest

_RESULTS = {}


class AcceptanceRecorder:
    """Record a criterion verdict before the assert that enforces it."""

    def record(self, number, label, passed):
        _RESULTS[int(number)] = (str(label), bool(passed))
        return bool(passed)


@pytest.fixture
def acceptance():
    return AcceptanceRecorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        label, ok = _RESULTS[number]
        verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE {number}: {label}: {verdict}")
