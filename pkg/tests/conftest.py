"""Collects one verdict line per acceptance criterion and prints them after the run."""

import pytest

ACCEPTANCE: dict[int, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    number = getattr(item.function, "criterion", None)
    if number is None:
        return
    detail = getattr(item.function, "detail", "")
    if report.skipped:
        ACCEPTANCE[number] = ("SKIP", str(report.longrepr[2]) if isinstance(report.longrepr, tuple) else "")
    elif report.when == "call":
        ACCEPTANCE[number] = ("PASS" if report.passed else "FAIL", detail)
    elif report.failed and number not in ACCEPTANCE:
        ACCEPTANCE[number] = ("FAIL", f"error during {report.when}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        verdict, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {verdict}  {detail}")
