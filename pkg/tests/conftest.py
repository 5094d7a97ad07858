import pytest

from lexcat.lexica import load_lexica


@pytest.fixture(scope="session")
def lexica():
    return load_lexica()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    tr = terminalreporter
    passed = {r.nodeid for r in tr.stats.get("passed", [])}
    failed = {r.nodeid for r in tr.stats.get("failed", [])}
    lines = []
    for nodeid in sorted(passed | failed):
        if "test_acceptance.py" in nodeid:
            name = nodeid.split("::")[-1]
            lines.append((name, nodeid in passed))
    if lines:
        tr.section("acceptance criteria")
        for name, ok in lines:
            tr.line(f"{name}: {'PASS' if ok else 'FAIL'}")
