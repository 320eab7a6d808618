from __future__ import annotations

import pytest

_criteria: dict[str, tuple[int, str]] = {}
_outcomes: dict[int, list[bool]] = {}
_titles: dict[int, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _criteria[item.nodeid] = (number, title)
            _titles[number] = title


def pytest_runtest_logreport(report):
    if report.nodeid not in _criteria:
        return
    number, _ = _criteria[report.nodeid]
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(number, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _titles:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_titles):
        results = _outcomes.get(number)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number}: {status}  ({_titles[number]})")
