import pytest

# acceptance verdicts, filled by tests/test_acceptance.py and echoed at the end of the run
VERDICTS = {}


@pytest.fixture
def verdict():
    def record(number, ok, detail):
        VERDICTS[number] = (bool(ok), detail)
        print(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
