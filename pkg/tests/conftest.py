"""Prints one pass/fail line per acceptance criterion after the run."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_criteria: dict[int, dict] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            n, title = m.args
            _criteria.setdefault(n, {"title": title, "outcomes": []})
            item.user_properties.append(("criterion", n))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    entry = _criteria[props["criterion"]]
    if report.when == "call" or report.outcome != "passed":
        entry["outcomes"].append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        e = _criteria[n]
        if not e["outcomes"]:
            status = "NOT RUN"
        elif all(o == "passed" for o in e["outcomes"]):
            status = "PASS"
        else:
            status = "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {e['title']}")
