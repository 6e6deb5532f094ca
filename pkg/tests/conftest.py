"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


class _Recorder:
    def __init__(self, number):
        self.number = number
        self.details: list[str] = []

    def note(self, text: str) -> None:
        self.details.append(text)


@pytest.fixture
def acceptance(request):
    mark = request.node.get_closest_marker("criterion")
    rec = _Recorder(mark.args[0] if mark else None)
    request.node._acceptance = rec
    return rec


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    number, title = mark.args
    rec = getattr(item, "_acceptance", None)
    detail = "; ".join(rec.details) if rec else ""
    if rep.failed and call.excinfo is not None:
        msg = str(call.excinfo.value).splitlines()[0] if str(call.excinfo.value) else call.excinfo.typename
        detail = (detail + "; " if detail else "") + msg[:200]
    _ACCEPTANCE[number] = {"title": title, "passed": rep.passed, "detail": detail}


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        r = _ACCEPTANCE[number]
        status = "PASS" if r["passed"] else "FAIL"
        tr.write_line(f"[{status}] criterion {number:>2}: {r['title']} -- {r['detail']}")
