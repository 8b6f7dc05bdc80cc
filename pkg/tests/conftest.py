import pytest

_RESULTS: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    passed = call.excinfo is None
    prev = _RESULTS.get(number)
    _RESULTS[number] = (title, passed and (prev is None or prev[1]))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, passed = _RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] AC{number} {title}")
