from __future__ import annotations

import pytest

_LINES: list = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL summary line for an acceptance criterion."""

    def record(name: str, ok: bool, detail: str) -> bool:
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
