"""Shared pytest plumbing: terminal summary for acceptance criteria."""

import pytest

_CRITERION_LINES = []


@pytest.fixture
def record_criterion():
    """Record one `criterion N: PASS/FAIL` line for the terminal summary."""

    def _record(number, passed, details):
        line = "criterion %d: %s - %s" % (
            number,
            "PASS" if passed else "FAIL",
            details,
        )
        _CRITERION_LINES.append(line)
        print(line, flush=True)
        return line

    return _record


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERION_LINES):
            terminalreporter.write_line(line)
