import time
from collections import defaultdict

import pytest

# key -> list of (test name, passed, detail, seconds)
_ACCEPTANCE: dict[str, list] = defaultdict(list)
_TITLES: dict[str, str] = {}


class CriterionRecorder:
    def __init__(self) -> None:
        self.detail = ""
        self.start = time.perf_counter()

    def note(self, detail: str) -> None:
        self.detail = detail

    def include(self, seconds: float) -> None:
        """Count work done in a shared fixture towards this criterion's runtime."""
        self.start -= seconds


@pytest.fixture
def criterion(request):
    key, title = request.node.get_closest_marker("criterion").args
    _TITLES[key] = title
    rec = CriterionRecorder()
    yield rec
    rep = getattr(request.node, "rep_call", None)
    passed = rep is not None and rep.passed
    _ACCEPTANCE[key].append((request.node.name, passed, rec.detail, time.perf_counter() - rec.start))


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, title): acceptance criterion this test checks")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE, key=lambda k: int(k[1:])):
        parts = _ACCEPTANCE[key]
        ok = all(p[1] for p in parts)
        secs = sum(p[3] for p in parts)
        shown = [p for p in parts if not p[1]] or parts
        detail = "; ".join(f"{p[2]}" for p in shown if p[2])
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} [{secs:.2f} s] {_TITLES[key]}: {detail}")
