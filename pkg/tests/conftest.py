import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Collect one summary line per acceptance criterion."""

    def _record(criterion, passed, detail=""):
        ACCEPTANCE_LINES.append((criterion, passed, detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}")
