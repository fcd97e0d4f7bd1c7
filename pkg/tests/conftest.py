import pytest

ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def criterion(request):
    """Record ``(passed, detail)`` for one acceptance criterion."""
    results = request.config.stash[ACCEPTANCE]
    name = request.node.name
    results[name] = (False, "did not finish")

    def record(passed: bool, detail: str) -> bool:
        results[name] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name, (passed, detail) in sorted(results.items()):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
