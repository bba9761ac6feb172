import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

_acceptance_results = []


def pytest_runtest_logreport(report):
    if "test_acceptance" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.skipped):
        name = report.nodeid.split("::")[-1]
        if report.passed:
            outcome = "PASS"
        elif report.skipped:
            outcome = "SKIP"
        else:
            outcome = "FAIL"
        _acceptance_results.append((outcome, name, getattr(report, "duration", 0.0)))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for outcome, name, duration in _acceptance_results:
        terminalreporter.write_line(f"[{outcome}] {name} ({duration:.1f}s)")
