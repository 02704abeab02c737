import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            item.user_properties.append(("criterion", tuple(mark.args)))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        if report.passed:
            status = "PASS"
        elif hasattr(report, "wasxfail"):
            status = "FAIL (known)"
        else:
            status = "FAIL"
        _RESULTS[props["criterion"]] = status


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_RESULTS.items()):
        terminalreporter.write_line(f"criterion {number:2d} {status:12s} {title}")
