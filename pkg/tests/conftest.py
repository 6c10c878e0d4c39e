import pytest

_acceptance_results = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(num, desc): ties a test to one acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call":
        marker = item.get_closest_marker("acceptance")
        if marker:
            _acceptance_results.append((marker.args[0], marker.args[1], report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num, desc, passed in sorted(_acceptance_results):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {num:>2}: {status} - {desc}")
