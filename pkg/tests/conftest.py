"""Acceptance-criterion reporting.

Tests marked ``@pytest.mark.criterion(n, "name")`` get one PASS/FAIL/SKIP
line each in the terminal summary.
"""

import pytest

_RESULTS: dict[int, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, name = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        _RESULTS[number] = (status, name, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, name, duration = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {status}  {name}  ({duration:.1f}s)")
