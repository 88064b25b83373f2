import sys

import pytest

from spinstar.system import tms


@pytest.fixture
def system():
    return tms()


def small(n, **kw):
    return tms().with_updates(n_peripheral=n, **kw)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
