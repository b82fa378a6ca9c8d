"""Collects the outcome of every acceptance criterion and prints one line each."""

import pytest

_OUTCOMES = {}
_SETUP = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "setup":
        _SETUP[number] = rep.duration
        if rep.outcome != "passed":
            _OUTCOMES[number] = (title, rep.outcome, rep.duration)
    elif rep.when == "call":
        _OUTCOMES[number] = (title, rep.outcome, _SETUP.get(number, 0.0) + rep.duration)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        title, outcome, duration = _OUTCOMES[number]
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}  {verdict}  {title}  ({duration:.1f} s)")
