"""Intermodal mobility-on-demand planning with accessibility fairness.

Network-flow LPs that route demands over a layered walk/bike/car/transit
graph under a shared fleet budget, minimizing either total travel time or
regional accessibility unfairness, plus a path-level allocation of the
resulting flows.
"""

__version__ = "0.1.0"

from iamod.errors import DataError, IamodError, InfeasibleError  # noqa: E402
from iamod.network import Arc, IntermodalGraph, Layer, Node, build_graph  # noqa: E402
from iamod.scenario import Demand, Scenario, load_scenario, make_scenario  # noqa: E402
from iamod.planner import (  # noqa: E402
    FAIRNESS,
    TIME,
    FlowSolution,
    build_problem,
    flow_metrics,
    solve,
    solve_min_time,
    solve_min_unfairness,
)
from iamod.pathalloc import allocate_all  # noqa: E402

__all__ = [
    "__version__", "IamodError", "DataError", "InfeasibleError",
    "Layer", "Node", "Arc", "IntermodalGraph", "build_graph",
    "Demand", "Scenario", "make_scenario", "load_scenario",
    "TIME", "FAIRNESS", "FlowSolution", "build_problem", "solve", "solve_min_time",
    "solve_min_unfairness", "flow_metrics", "allocate_all",
]
