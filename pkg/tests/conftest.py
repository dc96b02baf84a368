import math

import pytest

from conflictmetrics.metrics import AgentState, MetricsConfig


@pytest.fixture
def cfg():
    return MetricsConfig()


@pytest.fixture
def head_on_pair():
    """A eastbound at the origin, B westbound 50 m ahead, both 4x2 m at 10 m/s."""
    a = AgentState("A", 0.0, 0.0, 0.0, 10.0, 0.0, 4.0, 2.0)
    b = AgentState("B", 0.0, 50.0, 0.0, 10.0, math.pi, 4.0, 2.0)
    return a, b


@pytest.fixture
def perpendicular_pair():
    """A eastbound at the origin, B northbound from (20, -20), both 4x2 m."""
    a = AgentState("A", 0.0, 0.0, 0.0, 10.0, 0.0, 4.0, 2.0)
    b = AgentState("B", 0.0, 20.0, -20.0, 10.0, math.pi / 2, 4.0, 2.0)
    return a, b


@pytest.fixture
def offset_pair():
    """Head-on geometry shifted laterally so the center lines miss by 10 m."""
    a = AgentState("A", 0.0, 0.0, 0.0, 10.0, 0.0, 4.0, 2.0)
    b = AgentState("B", 0.0, 50.0, 10.0, 10.0, math.pi, 4.0, 2.0)
    return a, b
