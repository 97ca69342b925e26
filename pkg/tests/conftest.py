import pytest

ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""

    def record(number: int, description: str, passed: bool, detail: str = "") -> None:
        status = "PASS" if passed else "FAIL"
        line = f"[{status}] {number:2d} {description}"
        if detail:
            line += f": {detail}"
        ACCEPTANCE[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
