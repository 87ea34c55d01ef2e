"""Bundled synthetic instances.

``demo_scenario``
    Four demands in three regions. Two of them compete for a fleet that is
    too small to serve both by car: a short trip with a 18-minute bike
    alternative and a long trip whose walk + transit alternative takes 24
    minutes. Minimum-time operation gives the cars to the short trip (more
    minutes saved per vehicle); minimum-unfairness operation moves enough
    cars to the long trip to bring its average under the 20-minute
    threshold.
``diamond_gap_scenario``
    One demand whose flow must split evenly over a 15-minute and a
    25-minute route: average 20 minutes (no flow-level excess) while half of
    the users take a path 5 minutes over the threshold.
``random_scenario``
    Seeded random instances with integer travel times and symmetric car
    layers, used by the test-suite.
"""

from __future__ import annotations

import numpy as np

from iamod.network import Arc, IntermodalGraph, Layer, Node, build_graph
from iamod.scenario import Demand, Scenario, make_scenario


class GraphBuilder:
    """Assigns dense ids while nodes and arcs are declared."""

    def __init__(self):
        self.nodes: list[Node] = []
        self.arcs: list[Arc] = []
        self.by_label: dict[str, int] = {}

    def node(self, layer: Layer, label: str) -> int:
        nid = len(self.nodes)
        self.nodes.append(Node(nid, layer, label))
        self.by_label[label] = nid
        return nid

    def arc(self, tail: str, head: str, minutes: float, switch: bool = False) -> int:
        t, h = self.by_label[tail], self.by_label[head]
        layer = None if switch else self.nodes[t].layer
        aid = len(self.arcs)
        self.arcs.append(Arc(aid, t, h, float(minutes), layer))
        return aid

    def both(self, a: str, b: str, minutes: float) -> None:
        self.arc(a, b, minutes)
        self.arc(b, a, minutes)

    def build(self) -> IntermodalGraph:
        return build_graph(self.nodes, self.arcs)


def demo_scenario() -> Scenario:
    gb = GraphBuilder()
    O, D, W, B, C, P = (Layer.ORIGIN, Layer.DESTINATION, Layer.WALK, Layer.BIKE,
                        Layer.CAR, Layer.PUBLIC_TRANSIT)
    for lbl in ("oA", "oB", "oC", "oE"):
        gb.node(O, lbl)
    for lbl in ("dA", "dB", "dC", "dE"):
        gb.node(D, lbl)
    for lbl in ("w1", "w2", "w3", "w4", "w5", "w6", "w7"):
        gb.node(W, lbl)
    for lbl in ("b1", "b2", "b3", "b4"):
        gb.node(B, lbl)
    for lbl in ("c1", "c2", "c3", "c4"):
        gb.node(C, lbl)
    for lbl in ("p1", "p2"):
        gb.node(P, lbl)

    # short trip A: car 3+4+1 = 8, bike 1+16+1 = 18, walk 2+31+2 = 35
    gb.arc("oA", "c1", 3, switch=True)
    gb.both("c1", "c2", 4)
    gb.arc("c2", "dA", 1, switch=True)
    gb.arc("oA", "b1", 1, switch=True)
    gb.both("b1", "b2", 16)
    gb.arc("b2", "dA", 1, switch=True)
    gb.arc("oA", "w1", 2, switch=True)
    gb.both("w1", "w2", 31)
    gb.arc("w2", "dA", 2, switch=True)

    # long trip B: car 3+9+1 = 13, walk + transit 1+8+12+1+2 = 24
    gb.arc("oB", "c3", 3, switch=True)
    gb.both("c3", "c4", 9)
    gb.arc("c4", "dB", 1, switch=True)
    gb.arc("oB", "w3", 1, switch=True)
    gb.arc("w3", "p1", 8, switch=True)
    gb.both("p1", "p2", 12)
    gb.arc("p2", "w4", 1, switch=True)
    gb.arc("w4", "dB", 2, switch=True)
    gb.both("w3", "w4", 45)

    # C: walk only, 1+10+1 = 12
    gb.arc("oC", "w5", 1, switch=True)
    gb.both("w5", "w6", 10)
    gb.arc("w6", "dC", 1, switch=True)

    # E: bike then walk, 1+9+1+3+1 = 15
    gb.arc("oE", "b3", 1, switch=True)
    gb.both("b3", "b4", 9)
    gb.arc("b4", "w7", 1, switch=True)
    gb.both("w7", "w6", 3)
    gb.arc("w7", "dE", 1, switch=True)
    gb.arc("oE", "w5", 2, switch=True)
    gb.arc("w6", "dE", 6, switch=True)

    graph = gb.build()
    ids = gb.by_label
    demands = [
        Demand(0, ids["oA"], ids["dA"], 3.0, 1),
        Demand(1, ids["oB"], ids["dB"], 1.0, 2),
        Demand(2, ids["oC"], ids["dC"], 2.0, 3),
        Demand(3, ids["oE"], ids["dE"], 1.0, 1),
    ]
    return make_scenario(graph, demands, {1: 1000.0, 2: 500.0, 3: 300.0},
                         fleet_cap=30.0, time_threshold=20.0)


def diamond_gap_scenario() -> Scenario:
    """Two routes, 15 min by car and 25 min on foot, split 0.5/0.5.

    The fleet admits exactly half the demand by car and both objectives
    want as much car use as possible, so the split is forced.
    """
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    for lbl in ("c1", "c2"):
        gb.node(Layer.CAR, lbl)
    for lbl in ("w1", "w2"):
        gb.node(Layer.WALK, lbl)
    # fast route: car 3 + 10 + 2 = 15 ; slow route: walk 1 + 23 + 1 = 25
    gb.arc("o", "c1", 3, switch=True)
    gb.arc("c1", "c2", 10)
    gb.arc("c2", "c1", 10)
    gb.arc("c2", "d", 2, switch=True)
    gb.arc("o", "w1", 1, switch=True)
    gb.arc("w1", "w2", 23)
    gb.arc("w2", "d", 1, switch=True)
    graph = gb.build()
    ids = gb.by_label
    # rate 2 users/min; the car loop (10 out + 10 back) costs 20 vehicles per
    # user/min, so a fleet of 20 admits exactly half the demand by car
    demands = [Demand(0, ids["o"], ids["d"], 2.0, 1)]
    return make_scenario(graph, demands, {1: 100.0}, fleet_cap=20.0, time_threshold=20.0)


def random_scenario(seed: int, n_demands: int = 3, fleet_cap: float = 1e6,
                    time_threshold: float = 20.0) -> Scenario:
    """Random connected instance with at most 30 nodes and 80 arcs.

    Walk is a ring plus chords, so every destination is reachable on foot.
    Car arcs come in symmetric pairs so any car flow can be rebalanced.
    """
    rng = np.random.default_rng(seed)
    n_demands = int(min(max(n_demands, 1), 5))
    gb = GraphBuilder()
    n_w, n_b, n_c, n_p = 6, 3, 4, 3
    for i in range(n_demands):
        gb.node(Layer.ORIGIN, f"o{i}")
    for i in range(n_demands):
        gb.node(Layer.DESTINATION, f"d{i}")
    for layer, k, pre in ((Layer.WALK, n_w, "w"), (Layer.BIKE, n_b, "b"),
                          (Layer.CAR, n_c, "c"), (Layer.PUBLIC_TRANSIT, n_p, "p")):
        for i in range(k):
            gb.node(layer, f"{pre}{i}")

    def t(lo, hi):
        return int(rng.integers(lo, hi + 1))

    for i in range(n_w):
        gb.both(f"w{i}", f"w{(i + 1) % n_w}", t(4, 15))
    gb.both("w0", f"w{n_w // 2}", t(6, 20))
    for i in range(n_b - 1):
        gb.both(f"b{i}", f"b{i + 1}", t(2, 8))
    for i in range(n_c - 1):
        gb.both(f"c{i}", f"c{i + 1}", t(1, 6))
    gb.both("c0", f"c{n_c - 1}", t(2, 8))
    for i in range(n_p - 1):
        gb.both(f"p{i}", f"p{i + 1}", t(2, 7))
    for i in range(n_p):
        w = f"w{int(rng.integers(n_w))}"
        gb.arc(w, f"p{i}", t(3, 8), switch=True)
        gb.arc(f"p{i}", w, t(1, 3), switch=True)
    for i in range(n_b):
        gb.arc(f"b{i}", f"w{int(rng.integers(n_w))}", t(1, 2), switch=True)
    for i in range(n_demands):
        gb.arc(f"o{i}", f"w{int(rng.integers(n_w))}", t(1, 4), switch=True)
        gb.arc(f"w{int(rng.integers(n_w))}", f"d{i}", t(1, 4), switch=True)
        if rng.random() < 0.7:
            gb.arc(f"o{i}", f"c{int(rng.integers(n_c))}", t(2, 5), switch=True)
        if rng.random() < 0.7:
            gb.arc(f"c{int(rng.integers(n_c))}", f"d{i}", t(1, 3), switch=True)
        if rng.random() < 0.5:
            gb.arc(f"o{i}", f"b{int(rng.integers(n_b))}", t(1, 3), switch=True)
        if rng.random() < 0.5:
            gb.arc(f"b{int(rng.integers(n_b))}", f"d{i}", t(1, 3), switch=True)
    graph = gb.build()
    ids = gb.by_label
    n_regions = int(rng.integers(1, 4))
    perm = rng.permutation(n_demands)
    demands = [
        Demand(i, ids[f"o{i}"], ids[f"d{int(perm[i])}"],
               float(rng.choice([0.5, 1.0, 1.5, 2.0, 3.0])), int(rng.integers(n_regions)))
        for i in range(n_demands)
    ]
    pops = {r: float(rng.integers(100, 1000)) for r in range(n_regions)}
    return make_scenario(graph, demands, pops, fleet_cap=fleet_cap, time_threshold=time_threshold)
