import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria = {}


@pytest.fixture
def criterion(request):
    """Record a one-line verdict for an acceptance criterion.

    Call it with (label, passed, detail); the line is printed in the
    terminal summary whether or not output capture is on.
    """

    def record(label, passed, detail):
        _criteria[label] = (bool(passed), detail)
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria, key=lambda s: int(s[1:])):
        passed, detail = _criteria[label]
        terminalreporter.write_line(f"{label} {'PASS' if passed else 'FAIL'}  {detail}")
