import math

import hypothesis
import numpy as np
import pytest

from hsac.dynamics import AircraftParams, UcavState

hypothesis.settings.register_profile("default", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running learning experiments")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def params():
    return AircraftParams()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng: np.random.Generator, p: AircraftParams = AircraftParams()) -> UcavState:
    """An admissible state drawn uniformly inside the operating bands."""
    return UcavState(
        x=rng.uniform(-20000, 20000),
        y=rng.uniform(-20000, 20000),
        z=-rng.uniform(p.h_min, p.h_max),
        v=rng.uniform(p.v_min, p.v_max),
        gamma=rng.uniform(-math.pi / 2 + 1e-3, math.pi / 2 - 1e-3),
        chi=rng.uniform(-math.pi, math.pi),
        alpha=rng.uniform(p.alpha_min, p.alpha_max),
        mu=rng.uniform(-math.pi, math.pi),
    )
