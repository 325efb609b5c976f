import pytest

_LINES = []


class Criterion:
    """Collects the individual checks of one acceptance criterion."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, label, ok, detail=""):
        self.checks.append((label, bool(ok), detail))
        return bool(ok)

    def verify(self):
        bad = [f"{label}: {detail}" for label, ok, detail in self.checks if not ok]
        assert not bad, "; ".join(bad)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): an acceptance criterion")


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    crit = Criterion(*marker.args)
    request.node.criterion = crit
    return crit


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = getattr(item, "criterion", None)
    if crit is None or rep.when != "call":
        return
    status = "PASS" if rep.passed else "FAIL"
    n_ok = sum(ok for _, ok, _ in crit.checks)
    line = f"criterion {crit.number} {status}: {crit.title} ({n_ok}/{len(crit.checks)} checks ok)"
    details = [f"    {'ok  ' if ok else 'FAIL'} {label}: {detail}" for label, ok, detail in crit.checks]
    _LINES.append((crit.number, line, details))


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line, details in sorted(_LINES):
        terminalreporter.write_line(line)
        for d in details:
            terminalreporter.write_line(d)
