import math

import numpy as np
import pytest

from sdrleague.numerology import DEFAULT_NUMEROLOGY


def qfunc(x):
    """Gaussian tail probability, written against math.erfc."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@pytest.fixture
def num():
    return DEFAULT_NUMEROLOGY


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def report_criterion(number, passed, detail):
    """Record and print one acceptance line; the summary repeats them at the end."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
