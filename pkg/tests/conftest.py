import pytest

import _suite

_criteria: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    if rep.failed:
        _criteria[number] = (title, "FAIL")
    elif rep.when == "call" and number not in _criteria:
        _criteria[number] = (title, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, verdict = _criteria[number]
        terminalreporter.write_line(f"criterion {number:2d} {verdict}: {title}")


@pytest.fixture(scope="session")
def suite():
    return list(zip(_suite.suite_specs(), _suite.suite()))


@pytest.fixture
def ctx_a():
    return _suite.instance_a()


@pytest.fixture
def ctx_z():
    return _suite.instance_z()
