import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=200)
settings.load_profile("default")

# filled by test_acceptance.py; printed once at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        passed, text = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {key}: {text}")


@pytest.fixture
def record_criterion():
    def record(key, passed, text):
        ACCEPTANCE_LINES[str(key)] = (bool(passed), text)
    return record
