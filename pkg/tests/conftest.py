import os

import pytest

from iamod.instances import GraphBuilder
from iamod.network import Layer
from iamod.scenario import Demand, make_scenario

os.environ.setdefault("HYPOTHESIS_PROFILE", "ci")
try:
    from hypothesis import HealthCheck, settings

    settings.register_profile("ci", max_examples=40, deadline=None,
                              suppress_health_check=[HealthCheck.too_slow])
    settings.load_profile(os.environ["HYPOTHESIS_PROFILE"])
except ImportError:  # pragma: no cover
    pass


def walk_chain(minutes, rate=1.0, threshold=20.0, fleet_cap=0.0):
    """o -> w0 -> ... -> wk -> d, all walking; ``minutes`` lists every arc time."""
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    n_w = len(minutes) - 1
    for i in range(n_w):
        gb.node(Layer.WALK, f"w{i}")
    gb.arc("o", "w0", minutes[0], switch=True)
    for i in range(n_w - 1):
        gb.arc(f"w{i}", f"w{i + 1}", minutes[i + 1])
    gb.arc(f"w{n_w - 1}", "d", minutes[-1], switch=True)
    g = gb.build()
    return make_scenario(g, [Demand(0, 0, 1, rate, 1)], {1: 100.0}, fleet_cap, threshold)


def car_or_walk(car_minutes, walk_minutes, rate=1.0, fleet_cap=1e6, threshold=20.0, populations=None):
    """One demand with a car route (o->c1->c2->d) and a walk route (o->w1->w2->d).

    ``car_minutes`` and ``walk_minutes`` are 3-tuples (access, main, egress);
    the car layer has a return arc c2->c1 of the same main time.
    """
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    gb.node(Layer.CAR, "c1")
    gb.node(Layer.CAR, "c2")
    gb.node(Layer.WALK, "w1")
    gb.node(Layer.WALK, "w2")
    gb.arc("o", "c1", car_minutes[0], switch=True)
    gb.arc("c1", "c2", car_minutes[1])
    gb.arc("c2", "c1", car_minutes[1])
    gb.arc("c2", "d", car_minutes[2], switch=True)
    gb.arc("o", "w1", walk_minutes[0], switch=True)
    gb.arc("w1", "w2", walk_minutes[1])
    gb.arc("w2", "d", walk_minutes[2], switch=True)
    g = gb.build()
    return make_scenario(g, [Demand(0, 0, 1, rate, 1)], populations or {1: 100.0}, fleet_cap, threshold)


@pytest.fixture
def demo():
    from iamod.instances import demo_scenario

    return demo_scenario()


@pytest.fixture
def diamond():
    from iamod.instances import diamond_gap_scenario

    return diamond_gap_scenario()
