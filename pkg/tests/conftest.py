import pytest

# criterion number -> (passed, detail), filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    def record(num, passed, detail):
        ACCEPTANCE[num] = (bool(passed), detail)
        print(f"criterion {num}: {'PASS' if passed else 'FAIL'} ({detail})")
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if passed else 'FAIL'} ({detail})")
