import pytest

_verdicts = []


@pytest.fixture
def record_criterion():
    """Collect one summary line per acceptance criterion."""
    def record(number, name, passed, detail=""):
        _verdicts.append((number, name, bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_verdicts, key=lambda v: v[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number}. {name}: {detail}")
