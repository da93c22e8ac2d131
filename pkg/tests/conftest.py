import pytest

from jobshop_dd.instance import parse_instance

T1_TEXT = "2 2\n0 3 1 2\n1 2 0 4"


@pytest.fixture
def t1():
    return parse_instance(T1_TEXT, "T1")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
