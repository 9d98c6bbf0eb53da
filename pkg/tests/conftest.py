import sys

import numpy as np
import pytest

from infocost.experiments import bernoulli


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def b1():
    return bernoulli(1.0)


UNIFORM2 = np.array([0.5, 0.5])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
