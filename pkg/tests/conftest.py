"""Prints one PASS/FAIL line per acceptance criterion after the run."""

_CRITERIA = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        detail = dict(report.user_properties).get("detail", "")
        _CRITERIA[name] = (report.outcome == "passed", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_CRITERIA):
        ok, detail = _CRITERIA[name]
        num = name.split("_")[2]
        terminalreporter.write_line(f"criterion {int(num):2d}: {'PASS' if ok else 'FAIL'}  {name}  {detail}")
