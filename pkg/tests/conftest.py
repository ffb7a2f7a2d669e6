import time
from dataclasses import replace

import pytest

from fedpoison import fl
from fedpoison.fl import AccuracyTable
from fedpoison.signals import ChannelConfig

TOY = {(0, 0): 0.5, (1, 0): 0.8, (1, 1): 0.2, (2, 0): 0.9, (2, 1): 0.5, (2, 2): 0.1}

FAST = replace(fl.FLConfig(), **fl.FAST_PROFILE)

# criterion lines printed at the end of the run by the acceptance module
ACCEPTANCE_LINES = []
BUILD_SECONDS = {}


@pytest.fixture
def toy():
    return AccuracyTable(2, dict(TOY))


@pytest.fixture(scope="session")
def fast_table_n5():
    """Fast profile: n=5, 20 rounds, 200 samples/client, 5 trials."""
    start = time.perf_counter()
    table = fl.estimate_table(5, 5, FAST, ChannelConfig())
    BUILD_SECONDS["fast_table_n5"] = time.perf_counter() - start
    return table


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
