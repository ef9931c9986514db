import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("expanse", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("expanse")

LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the lines are echoed in the terminal summary."""
    def record(tag, ok, detail):
        line = f"{tag} {'PASS' if ok else 'FAIL'} {detail}"
        print(line)
        LINES.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
