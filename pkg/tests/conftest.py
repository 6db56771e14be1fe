import pytest

_RESULTS: list[tuple[int, bool, str]] = []


class Gate:
    """Records one pass/fail line per acceptance criterion."""

    def check(self, criterion: int, passed: bool, detail: str) -> bool:
        line = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        _RESULTS.append((criterion, passed, line))
        return passed


@pytest.fixture
def gate():
    return Gate()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(_RESULTS):
        terminalreporter.write_line(line)
