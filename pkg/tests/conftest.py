"""Collects the one-line acceptance verdicts and prints them after the run."""

import re

import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record ``(criterion, passed, detail)`` and echo the line immediately."""

    def record(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(re.search(r"C(\d+)", s).group(1))):
            terminalreporter.write_line(line)
