import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from agentrel.chain import AgentMarkovChain

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FIG2_Q = [[0.5, 0.3, 0.0], [0.0, 0.4, 0.3], [0.0, 0.0, 0.6]]
FIG2_RP = [0.1, 0.2, 0.3]
FIG2_RM = [0.1, 0.1, 0.1]


@pytest.fixture
def fig2():
    """Three-state worked example: s0 -> s1 -> s2 with self-loops."""
    return AgentMarkovChain.from_start_state(FIG2_Q, FIG2_RP, FIG2_RM, 0, ("reason", "tool_call", "verify"))


@pytest.fixture
def one_state():
    return AgentMarkovChain([[0.5]], [0.4], [0.1], [1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
