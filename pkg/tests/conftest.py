from __future__ import annotations

import re

import pytest

# criterion number -> detail line, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}

_CRITERION = re.compile(r"test_criterion_(\d+)_")


@pytest.fixture
def record_criterion():
    def record(number: int, detail: str) -> None:
        ACCEPTANCE[number] = detail

    return record


def pytest_terminal_summary(terminalreporter):
    outcomes: dict[int, str] = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            match = _CRITERION.search(getattr(rep, "nodeid", ""))
            if match and rep.when == "call" or (match and status == "error"):
                outcomes[int(match.group(1))] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(outcomes):
        detail = ACCEPTANCE.get(number, "no measurement recorded")
        terminalreporter.write_line(f"criterion {number}: {outcomes[number]} | {detail}")
