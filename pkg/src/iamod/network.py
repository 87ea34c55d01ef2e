"""Layered intermodal digraph.

Six node layers (walk, bike, car, public transit, origin, destination) that
share no nodes. Arcs either stay inside one of the four mobility layers or are
mode-switch arcs between an allowed ordered pair of layers. Origin and
destination layers hold no internal arcs.

Network file layout (JSON)::

    {"nodes": [{"id": 0, "layer": "Origin", "label": "5611"}, ...],
     "arcs":  [{"id": 0, "tail": 0, "head": 3, "travel_time_min": 3.0,
                "kind": "ModeSwitch"}, ...]}

``kind`` is one of ``Walk``, ``Bike``, ``Car``, ``PublicTransit`` (within-layer
arcs) or ``ModeSwitch``. ``label`` is optional.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from iamod.errors import (
    DanglingArcEndpoint,
    DataError,
    DuplicateArcId,
    DuplicateNodeId,
    IllegalModeSwitch,
    InternalArcInTerminalLayer,
    LayerMismatch,
    NegativeTravelTime,
    SelfLoopArc,
)


class Layer(enum.Enum):
    WALK = "Walk"
    BIKE = "Bike"
    CAR = "Car"
    PUBLIC_TRANSIT = "PublicTransit"
    ORIGIN = "Origin"
    DESTINATION = "Destination"

    @property
    def is_terminal(self) -> bool:
        return self in (Layer.ORIGIN, Layer.DESTINATION)


MOBILITY_LAYERS = (Layer.WALK, Layer.BIKE, Layer.CAR, Layer.PUBLIC_TRANSIT)

SWITCH_KIND = "ModeSwitch"

# Ordered (tail, head) layer pairs a mode-switch arc may connect.
PERMITTED_SWITCHES = frozenset(
    {
        (Layer.CAR, Layer.DESTINATION),
        (Layer.ORIGIN, Layer.CAR),
        (Layer.PUBLIC_TRANSIT, Layer.WALK),
        (Layer.WALK, Layer.PUBLIC_TRANSIT),
        (Layer.BIKE, Layer.WALK),
        (Layer.ORIGIN, Layer.WALK),
        (Layer.WALK, Layer.DESTINATION),
        (Layer.ORIGIN, Layer.BIKE),
        (Layer.BIKE, Layer.DESTINATION),
    }
)


def validate_switch_pair(tail_layer: Layer, head_layer: Layer) -> bool:
    return (tail_layer, head_layer) in PERMITTED_SWITCHES


@dataclass(frozen=True)
class Node:
    id: int
    layer: Layer
    label: Optional[str] = None


@dataclass(frozen=True)
class Arc:
    """Directed arc. ``layer`` is None for mode-switch arcs."""

    id: int
    tail: int
    head: int
    travel_time: float
    layer: Optional[Layer] = None

    @property
    def is_switch(self) -> bool:
        return self.layer is None

    @property
    def kind(self) -> str:
        return SWITCH_KIND if self.layer is None else self.layer.value


class IntermodalGraph:
    """Validated, immutable intermodal digraph.

    Use :func:`build_graph` to construct one. Nodes and arcs are kept sorted
    by id; ``node_index`` / ``arc_index`` map ids to positions in those
    tuples, which is also the column order of the numpy views
    (``tail_pos``, ``head_pos``, ``times``).
    """

    def __init__(self, nodes: tuple[Node, ...], arcs: tuple[Arc, ...]):
        self.nodes = nodes
        self.arcs = arcs
        self.node_index = {n.id: i for i, n in enumerate(nodes)}
        self.arc_index = {a.id: i for i, a in enumerate(arcs)}
        self._node_by_id = {n.id: n for n in nodes}
        out_arcs: dict[int, list[int]] = {n.id: [] for n in nodes}
        in_arcs: dict[int, list[int]] = {n.id: [] for n in nodes}
        for a in arcs:
            out_arcs[a.tail].append(a.id)
            in_arcs[a.head].append(a.id)
        self._out = {k: tuple(v) for k, v in out_arcs.items()}
        self._in = {k: tuple(v) for k, v in in_arcs.items()}
        self.tail_pos = np.array([self.node_index[a.tail] for a in arcs], dtype=np.int64)
        self.head_pos = np.array([self.node_index[a.head] for a in arcs], dtype=np.int64)
        self.times = np.array([a.travel_time for a in arcs], dtype=np.float64)
        self.times.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, IntermodalGraph):
            return NotImplemented
        return self.nodes == other.nodes and self.arcs == other.arcs

    __hash__ = None

    def __repr__(self):
        return f"IntermodalGraph({len(self.nodes)} nodes, {len(self.arcs)} arcs)"

    def node(self, node_id: int) -> Node:
        return self._node_by_id[node_id]

    def arc(self, arc_id: int) -> Arc:
        return self.arcs[self.arc_index[arc_id]]

    def has_node(self, node_id: int) -> bool:
        return node_id in self._node_by_id

    def out_arcs(self, node_id: int) -> tuple[int, ...]:
        return self._out[node_id]

    def in_arcs(self, node_id: int) -> tuple[int, ...]:
        return self._in[node_id]

    def nodes_of_layer(self, layer: Layer) -> list[Node]:
        return [n for n in self.nodes if n.layer is layer]

    def switch_arcs(self) -> list[Arc]:
        return [a for a in self.arcs if a.is_switch]

    def car_arc_ids(self) -> list[int]:
        return [a.id for a in arcs_of_layer(self, Layer.CAR)]

    def arc_class(self, arc_id: int) -> str:
        """Mode class used in reports: the layer name, or ``Switch``."""
        a = self.arc(arc_id)
        return "Switch" if a.is_switch else a.layer.value


def arcs_of_layer(graph: IntermodalGraph, layer: Layer) -> list[Arc]:
    return [a for a in graph.arcs if a.layer is layer]


def build_graph(nodes: Iterable[Node], arcs: Iterable[Arc]) -> IntermodalGraph:
    nodes = sorted(nodes, key=lambda n: n.id)
    arcs = sorted(arcs, key=lambda a: a.id)
    by_id: dict[int, Node] = {}
    for n in nodes:
        if n.id in by_id:
            raise DuplicateNodeId(f"node id {n.id} appears twice")
        if not isinstance(n.layer, Layer):
            raise DataError(f"node {n.id}: unknown layer {n.layer!r}")
        by_id[n.id] = n
    seen_arcs = set()
    for a in arcs:
        if a.id in seen_arcs:
            raise DuplicateArcId(f"arc id {a.id} appears twice")
        seen_arcs.add(a.id)
        if a.tail not in by_id or a.head not in by_id:
            raise DanglingArcEndpoint(f"arc {a.id}: endpoint {a.tail}->{a.head} not a node")
        if a.tail == a.head:
            raise SelfLoopArc(f"arc {a.id}: self-loop at node {a.tail}")
        if not a.travel_time >= 0:  # also rejects NaN
            raise NegativeTravelTime(f"arc {a.id}: travel time {a.travel_time}")
        lt, lh = by_id[a.tail].layer, by_id[a.head].layer
        if a.is_switch:
            if not validate_switch_pair(lt, lh):
                raise IllegalModeSwitch(f"arc {a.id}: switch {lt.value}->{lh.value} not permitted")
        else:
            if a.layer.is_terminal:
                raise InternalArcInTerminalLayer(f"arc {a.id}: internal arc in {a.layer.value} layer")
            if lt is not a.layer or lh is not a.layer:
                raise LayerMismatch(
                    f"arc {a.id}: {a.layer.value} arc joins {lt.value}->{lh.value}"
                )
    return IntermodalGraph(tuple(nodes), tuple(arcs))


# ---------------------------------------------------------------- file format


def graph_to_dict(graph: IntermodalGraph) -> dict:
    nodes = []
    for n in graph.nodes:
        d = {"id": n.id, "layer": n.layer.value}
        if n.label is not None:
            d["label"] = n.label
        nodes.append(d)
    arcs = [
        {
            "id": a.id,
            "tail": a.tail,
            "head": a.head,
            "travel_time_min": float(a.travel_time),
            "kind": a.kind,
        }
        for a in graph.arcs
    ]
    return {"nodes": nodes, "arcs": arcs}


def graph_from_dict(data: dict) -> IntermodalGraph:
    try:
        nodes = [
            Node(int(n["id"]), Layer(n["layer"]), n.get("label")) for n in data["nodes"]
        ]
        arcs = []
        for a in data["arcs"]:
            kind = a["kind"]
            layer = None if kind == SWITCH_KIND else Layer(kind)
            arcs.append(
                Arc(int(a["id"]), int(a["tail"]), int(a["head"]), float(a["travel_time_min"]), layer)
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed network document: {exc}") from exc
    return build_graph(nodes, arcs)


def dumps_network(graph: IntermodalGraph) -> str:
    return json.dumps(graph_to_dict(graph), indent=1) + "\n"


def loads_network(text: str) -> IntermodalGraph:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"network file is not valid JSON: {exc}") from exc
    return graph_from_dict(data)


def load_network(path) -> IntermodalGraph:
    with open(path, encoding="utf-8") as fh:
        return loads_network(fh.read())


def save_network(graph: IntermodalGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(graph))
