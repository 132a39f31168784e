"""Collects acceptance-criterion outcomes and prints one PASS/FAIL line each."""
import re

_RESULTS: dict[str, tuple[str, str]] = {}
_PAT = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _PAT.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        verdict = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        detail = ""
        if report.failed:
            lines = [ln for ln in str(report.longrepr).splitlines() if ln.startswith("E ")]
            detail = lines[0][1:].strip() if lines else ""
        _RESULTS[m.group(1)] = (verdict, m.group(2).replace("_", " "), detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_RESULTS, key=int):
        verdict, title, detail = _RESULTS[key]
        line = f"{verdict} criterion {key}: {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
