"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

CRITERIA = {}


@pytest.fixture
def record_criterion():
    """``record(number, passed, detail)`` stores one acceptance verdict."""

    def record(number, passed, detail):
        CRITERIA[int(number)] = (bool(passed), str(detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 13):
        if number not in CRITERIA:
            terminalreporter.write_line(f"criterion {number:2d}: NOT RUN")
            continue
        passed, detail = CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
