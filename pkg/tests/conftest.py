"""Acceptance bookkeeping: one PASS/FAIL/SKIP line per criterion at the end of the run.

Mark a test with ``@pytest.mark.criterion(n, "title")`` and use the ``measured``
fixture to attach the observed values to its line.
"""

from collections import OrderedDict

import pytest

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def _entry(item):
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return None
    number, title = mark.args
    return _CRITERIA.setdefault(number, {"title": title, "outcomes": [], "notes": []})


@pytest.fixture
def measured(request):
    entry = _entry(request.node)

    def note(text: str) -> None:
        if entry is not None:
            entry["notes"].append(text)
    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    entry = _entry(item)
    if entry is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if report.skipped:
            reason = report.longrepr[2] if isinstance(report.longrepr, tuple) else str(report.longrepr)
            entry["outcomes"].append(("SKIP", reason.replace("Skipped: ", "")))
        else:
            entry["outcomes"].append(("PASS" if report.passed else "FAIL", ""))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        kinds = [k for k, _ in entry["outcomes"]]
        if "FAIL" in kinds:
            status = "FAIL"
        elif kinds and all(k == "SKIP" for k in kinds):
            status = "SKIP"
        else:
            status = "PASS"
        detail = "; ".join(entry["notes"])
        if status == "SKIP":
            detail = entry["outcomes"][0][1]
        line = f"[{status}] criterion {number:2d}: {entry['title']}"
        terminalreporter.write_line(line + (f" ({detail})" if detail else ""))
