import zlib

import numpy as np
import pytest

from riswsr import _checks


@pytest.fixture(autouse=True, scope="session")
def _invariants_on():
    # unit modulus and the power budget are asserted inside every solver loop
    with _checks.invariant_checks(True):
        yield


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs and test ordering
    seed = zlib.crc32(request.node.name.encode())
    return np.random.default_rng([20240613, seed])


def pytest_terminal_summary(terminalreporter):
    from _report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(LINES):
            terminalreporter.write_line(line)
