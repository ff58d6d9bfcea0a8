import os

import numpy as np
import pytest

from ensquant.simulate import Family, PeriodSplit, SimulatorSpec, simulate

RUN_SLOW = os.getenv("ENSQUANT_RUN_SLOW") == "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-scale reproduction runs (set ENSQUANT_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="full-scale run; set ENSQUANT_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_toy1():
    """Toy1 series with 60/60/40 periods."""
    return simulate(SimulatorSpec(family=Family.TOY1, n=160, seed=3), PeriodSplit(n1=60, n2=60, n3=40))
