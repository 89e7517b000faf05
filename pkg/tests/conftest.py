import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dyntdd.topology import NetworkTopology, PowerConfig

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def power():
    return PowerConfig()


@pytest.fixture
def line_topology():
    """Two cells 100 m apart on the x axis, one UE each, 30 m from its SCBS."""
    bs = np.array([[0.0, 0.0], [100.0, 0.0]])
    ue = np.array([[[30.0, 0.0]], [[100.0, 30.0]]])
    return NetworkTopology(bs, ue, cell_radius=40.0, area_side=200.0)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
