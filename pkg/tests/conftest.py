import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """``check(number, title, ok, detail)`` records a PASS/FAIL line and asserts ``ok``."""
    def check(number, title, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
    return check


def record_skip(number, title, reason):
    line = f"[SKIP] criterion {number:>2}: {title} ({reason})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
