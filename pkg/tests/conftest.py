import pytest

SEED_DEFAULT = 20261014
_results = {}


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=SEED_DEFAULT,
                     help=f"seed for randomized tests (default {SEED_DEFAULT})")


def pytest_report_header(config):
    return f"random seed: {config.getoption('--seed')}"


@pytest.fixture
def seed(request):
    return request.config.getoption("--seed")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    n = _criteria.get(report.nodeid)
    if n is None:
        return
    prev = _results.get(n, True)
    _results[n] = prev and report.passed


_criteria = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criteria[item.nodeid] = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if _results[n] else 'FAIL'}")
