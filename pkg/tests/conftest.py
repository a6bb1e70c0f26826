import warnings

import numpy as np
import pytest

from slowmanifold.fastslow_system import ConditionWarning, LipschitzWarning
from slowmanifold.systems import example2


@pytest.fixture
def quiet():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConditionWarning)
        warnings.simplefilter("ignore", LipschitzWarning)
        yield


@pytest.fixture
def ex2(quiet):
    return example2(epsilon=0.01, sigma1=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[key])
