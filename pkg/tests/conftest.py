"""Collects acceptance verdicts and prints them as a block after the run."""
import pytest

_VERDICTS = []


@pytest.fixture
def verdict():
    """``verdict(name, passed, detail)`` records and prints one pass/fail line."""
    def record(name, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
        _VERDICTS.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
