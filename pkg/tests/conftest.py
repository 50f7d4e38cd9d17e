import pytest

_RESULTS = []


@pytest.fixture
def acceptance():
    """Record one line per acceptance criterion; printed in the terminal summary."""
    def record(number, name, value, tol, passed, note=""):
        _RESULTS.append((number, name, value, tol, bool(passed), note))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number, name, value, tol, passed, note in sorted(_RESULTS, key=lambda r: r[0]):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}: value={value} tol={tol}"
        if note:
            line += f"  ({note})"
        tr.write_line(line)
