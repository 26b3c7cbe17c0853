import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """``criterion(label, passed, detail)`` records one acceptance line and asserts it."""

    def record(label, passed, detail):
        _ACCEPTANCE.append((label, bool(passed), detail))
        print(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
        assert passed, f"{label}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {label}: {detail}")
