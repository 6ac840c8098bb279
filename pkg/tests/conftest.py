import time

import pytest

SUITE_BUDGET = 120.0  # seconds for the whole test run

_lines = []
_start = {}


def pytest_sessionstart(session):
    _start["t"] = time.perf_counter()


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion.

    Usage: ``criterion(n, label, ok, detail)``; also asserts ``ok`` so the
    test fails with the same message.
    """

    def record(number, label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {label}" + (f"  [{detail}]" if detail else "")
        _lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - _start.get("t", time.perf_counter())
    _start["elapsed"] = elapsed
    if _lines and elapsed > SUITE_BUDGET and session.exitstatus == 0:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED


def pytest_terminal_summary(terminalreporter):
    if not _lines:
        return
    elapsed = _start.get("elapsed", 0.0)
    terminalreporter.section("acceptance criteria")
    for line in _lines:
        terminalreporter.write_line(line)
    ok = elapsed <= SUITE_BUDGET
    terminalreporter.write_line(
        f"{'PASS' if ok else 'FAIL'}  criterion 9: full suite wall time {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)"
    )
