import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_acceptance: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    crit = marker.kwargs.get("criterion", "?")
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "NOT RUN"}[rep.outcome]
        detail = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2].removeprefix("Skipped: ")
        _acceptance.append((crit, item.name, f"{status}{' - ' + detail if detail else ''}"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for crit, name, status in sorted(_acceptance, key=lambda r: (r[0], r[1])):
        terminalreporter.write_line(f"criterion {crit:<14} {name:<40} {status}")
