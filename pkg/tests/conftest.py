"""Collects the acceptance outcomes and prints one line per criterion at the end of the run."""

import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, str, str]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n, name = int(m.group(1)), m.group(2).replace("_", " ")
    detail = dict(report.user_properties).get("detail", "")
    if report.when == "call" or report.outcome != "passed":
        prev = _outcomes.get(n)
        if prev is None or prev[0] == "PASS":
            _outcomes[n] = ("PASS" if report.outcome == "passed" else "FAIL", name, detail)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        status, name, detail = _outcomes[n]
        line = f"criterion {n:2d} {status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
