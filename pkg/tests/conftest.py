import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA = {}


@pytest.fixture
def criterion():
    """``criterion(number, ok, detail)`` records and prints one acceptance line."""
    def record(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
