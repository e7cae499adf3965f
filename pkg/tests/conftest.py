import pytest

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion; the lines are
    printed in order in the terminal summary."""
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
