import numpy as np
import pytest

from atglearn.evaluation import build_ground_truth
from atglearn.simworld import SimConfig


@pytest.fixture(scope="session")
def orbit_gt():
    return build_ground_truth(SimConfig(), "orbit")


@pytest.fixture(scope="session")
def extended_gt():
    return build_ground_truth(SimConfig(), "orbit+grasp")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
