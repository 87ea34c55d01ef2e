"""Minimum-time and minimum-unfairness network-flow planning.

Both problems share the same flow model. Each demand is one commodity routed
over the whole intermodal graph, and empty cars may be rebalanced along car
arcs. Flow is conserved per node and per car node, and the cars in transit
may not exceed the fleet-size cap.

The minimum-time problem minimizes total user travel time plus a small
rebalancing penalty. The minimum-unfairness problem adds one slack per demand
bounding its average travel time in excess of the threshold, and minimizes
the population-weighted regional average of those slacks plus a small
multiple of the travel-time objective.

Models are assembled in physical units (users/minute, minutes) and solved in
normalized units: demand flows are divided by their rate and rebalancing
flows by the total demand rate. That keeps coefficients near one and makes
the minimum-time LP invariant to a common rescaling of rates and fleet.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from iamod.errors import DataError, InfeasibleError, SolverError
from iamod.lp import EQ, GE, LE, LpModel, LpSolution, Row, Status, solve_simplex
from iamod.network import Layer
from iamod.scenario import Scenario, demand_weights, total_demand_rate

TIME = "time"
FAIRNESS = "fairness"
OBJECTIVES = (TIME, FAIRNESS)

SOLUTION_FORMAT = "iamod-solution v1"
METRICS_FORMAT = "iamod-metrics v1"


@dataclass(frozen=True)
class VariableLayout:
    """Column layout: one flow block per demand, rebalancing, then slacks.

    ``car_arcs`` holds arc positions (indices into ``graph.arcs``) of the car
    layer, in arc-id order.
    """

    num_demands: int
    num_arcs: int
    car_arcs: tuple[int, ...]
    with_slack: bool = False

    @property
    def reb_offset(self) -> int:
        return self.num_demands * self.num_arcs

    @property
    def slack_offset(self) -> int:
        return self.reb_offset + len(self.car_arcs)

    @property
    def width(self) -> int:
        return self.slack_offset + (self.num_demands if self.with_slack else 0)

    def flow(self, m_pos: int, arc_pos: int) -> int:
        return m_pos * self.num_arcs + arc_pos

    def reb(self, k: int) -> int:
        return self.reb_offset + k

    def slack(self, m_pos: int) -> int:
        if not self.with_slack:
            raise IndexError("layout has no slack block")
        return self.slack_offset + m_pos


def make_layout(scenario: Scenario, with_slack: bool = False) -> VariableLayout:
    g = scenario.graph
    car = tuple(g.arc_index[a] for a in g.car_arc_ids())
    return VariableLayout(len(scenario.demands), len(g.arcs), car, with_slack)


# ------------------------------------------------------------------ assembly


def assemble_flow_balance(scenario: Scenario, layout: VariableLayout) -> list[Row]:
    """One equality per (node, demand): outflow - inflow = rate * (1[o] - 1[d])."""
    g = scenario.graph
    rows = []
    for mp, d in enumerate(scenario.demands):
        for node in g.nodes:
            coeffs = {}
            for a in g.out_arcs(node.id):
                coeffs[layout.flow(mp, g.arc_index[a])] = 1.0
            for a in g.in_arcs(node.id):
                coeffs[layout.flow(mp, g.arc_index[a])] = -1.0
            rhs = d.rate * ((node.id == d.origin) - (node.id == d.destination))
            rows.append(Row(coeffs, EQ, float(rhs), f"b{d.id}_{node.id}"))
    return rows


def assemble_car_balance(scenario: Scenario, layout: VariableLayout) -> list[Row]:
    """One equality per car node over car arcs, users plus rebalancing."""
    g = scenario.graph
    car_k = {ap: k for k, ap in enumerate(layout.car_arcs)}
    rows = []
    for node in g.nodes_of_layer(Layer.CAR):
        coeffs = {}
        for arcs, sign in ((g.out_arcs(node.id), 1.0), (g.in_arcs(node.id), -1.0)):
            for a in arcs:
                ap = g.arc_index[a]
                if ap not in car_k:
                    continue
                coeffs[layout.reb(car_k[ap])] = sign
                for mp in range(layout.num_demands):
                    coeffs[layout.flow(mp, ap)] = sign
        rows.append(Row(coeffs, EQ, 0.0, f"c{node.id}"))
    return rows


def assemble_fleet_cap(scenario: Scenario, layout: VariableLayout) -> Row:
    """Vehicles in circulation, sum over car arcs of t * (rebalancing + users)."""
    t = scenario.graph.times
    coeffs = {}
    for k, ap in enumerate(layout.car_arcs):
        coeffs[layout.reb(k)] = float(t[ap])
        for mp in range(layout.num_demands):
            coeffs[layout.flow(mp, ap)] = float(t[ap])
    return Row(coeffs, LE, scenario.fleet_cap, "fleet")


def objective_time(scenario: Scenario, layout: VariableLayout) -> dict[int, float]:
    t = scenario.graph.times
    c = {}
    for mp in range(layout.num_demands):
        for ap in range(layout.num_arcs):
            if t[ap]:
                c[layout.flow(mp, ap)] = float(t[ap])
    for k, ap in enumerate(layout.car_arcs):
        if t[ap]:
            c[layout.reb(k)] = scenario.gamma_reb * float(t[ap])
    return c


def assemble_slack_constraints(scenario: Scenario, layout: VariableLayout) -> list[Row]:
    """Per demand: sum_a (t_a / rate) x_a - slack <= threshold.

    The slack's non-negativity is its variable bound.
    """
    t = scenario.graph.times
    rows = []
    for mp, d in enumerate(scenario.demands):
        coeffs = {layout.flow(mp, ap): float(t[ap]) / d.rate for ap in range(layout.num_arcs) if t[ap]}
        coeffs[layout.slack(mp)] = -1.0
        rows.append(Row(coeffs, LE, scenario.time_threshold, f"s{d.id}"))
    return rows


def objective_unfairness(scenario: Scenario, layout: VariableLayout) -> dict[int, float]:
    c = {j: scenario.gamma_time * v for j, v in objective_time(scenario, layout).items()}
    w = demand_weights(scenario)
    for mp, d in enumerate(scenario.demands):
        if w[d.id]:
            c[layout.slack(mp)] = w[d.id]
    return c


# ------------------------------------------------------------------- problem


@dataclass
class PlannerProblem:
    """Assembled LP for one scenario and objective.

    ``raw`` is in physical units; ``model`` is the normalized model actually
    solved (and exported), with ``x = col_scale * y``.
    """

    scenario: Scenario
    objective: str
    layout: VariableLayout
    raw: LpModel
    model: LpModel
    col_scale: np.ndarray

    def solve(self, tol: float = 1e-9, max_iters: int = 200_000) -> "FlowSolution":
        lp = solve_simplex(self.model, tol=tol, max_iters=max_iters)
        return self.to_solution(lp)

    def to_solution(self, lp: LpSolution) -> "FlowSolution":
        if lp.status is Status.INFEASIBLE:
            raise InfeasibleError(
                f"{self.objective} problem is infeasible "
                "(unreachable destination or fleet cap too small)"
            )
        if lp.status is not Status.OPTIMAL:
            raise SolverError(f"solver stopped with status {lp.status.value}")
        x = self.col_scale * lp.x
        meta = {
            "status": lp.status.value,
            "iterations": lp.iterations,
            "lp_objective": lp.objective_value,
            "lp_max_violation": lp.max_violation,
        }
        return FlowSolution.from_vector(self.scenario, self.layout, x, self.objective, meta)


def _var_names(scenario: Scenario, layout: VariableLayout) -> list[str]:
    g = scenario.graph
    names = []
    for d in scenario.demands:
        names += [f"x{d.id}_{a.id}" for a in g.arcs]
    names += [f"r{g.arcs[ap].id}" for ap in layout.car_arcs]
    if layout.with_slack:
        names += [f"e{d.id}" for d in scenario.demands]
    return names


def build_problem(scenario: Scenario, objective: str = TIME) -> PlannerProblem:
    if objective not in OBJECTIVES:
        raise DataError(f"unknown objective {objective!r}; expected one of {OBJECTIVES}")
    fair = objective == FAIRNESS
    layout = make_layout(scenario, with_slack=fair)
    raw = LpModel(name="IAMOD_" + ("F" if fair else "T"))
    for name in _var_names(scenario, layout):
        raw.add_var(name)

    bal = assemble_flow_balance(scenario, layout)
    car = assemble_car_balance(scenario, layout)
    cap = assemble_fleet_cap(scenario, layout)
    raw.rows = bal + car + [cap]
    n_rows_flow = len(raw.rows)
    if fair:
        raw.rows += assemble_slack_constraints(scenario, layout)
        raw.objective = objective_unfairness(scenario, layout)
    else:
        raw.objective = objective_time(scenario, layout)

    total = total_demand_rate(scenario)
    reb_scale = total if total > 0 else 1.0
    col_scale = np.ones(layout.width)
    for mp, d in enumerate(scenario.demands):
        col_scale[layout.flow(mp, 0): layout.flow(mp, 0) + layout.num_arcs] = d.rate
    col_scale[layout.reb_offset: layout.slack_offset] = reb_scale
    row_scale = np.ones(len(raw.rows))
    n_nodes = len(scenario.graph.nodes)
    for mp, d in enumerate(scenario.demands):
        row_scale[mp * n_nodes: (mp + 1) * n_nodes] = 1.0 / d.rate
    row_scale[len(bal): n_rows_flow] = 1.0 / reb_scale
    obj_scale = 1.0 if fair else 1.0 / reb_scale
    model = raw.scaled(col_scale, row_scale, obj_scale)
    return PlannerProblem(scenario, objective, layout, raw, model, col_scale)


def solve_min_time(scenario: Scenario, **kw) -> "FlowSolution":
    return build_problem(scenario, TIME).solve(**kw)


def solve_min_unfairness(scenario: Scenario, **kw) -> "FlowSolution":
    return build_problem(scenario, FAIRNESS).solve(**kw)


def solve(scenario: Scenario, objective: str, **kw) -> "FlowSolution":
    return build_problem(scenario, objective).solve(**kw)


# ------------------------------------------------------------------ solution


@dataclass
class FlowSolution:
    """Optimal (or imported) flows.

    ``flows[m_pos, arc_pos]`` users/minute; ``rebalancing[k]`` on car arc
    ``layout.car_arcs[k]``; ``slacks[m_pos]`` minutes. For the minimum-time
    objective, and for demands with zero unfairness weight, slacks are the
    tight value ``max(0, avg time - threshold)`` computed from the flows.
    """

    scenario: Scenario
    objective: str
    flows: np.ndarray
    rebalancing: np.ndarray
    slacks: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def from_vector(cls, scenario, layout, x, objective, meta=None) -> "FlowSolution":
        M, A = layout.num_demands, layout.num_arcs
        flows = np.asarray(x[: M * A], dtype=float).reshape(M, A).copy()
        reb = np.asarray(x[layout.reb_offset: layout.slack_offset], dtype=float).copy()
        sol = cls(scenario, objective, flows, reb, np.zeros(M), dict(meta or {}))
        tight = sol.analytic_slacks()
        if layout.with_slack:
            slacks = np.asarray(x[layout.slack_offset: layout.width], dtype=float).copy()
            w = demand_weights(scenario)
            for mp, d in enumerate(scenario.demands):
                if w[d.id] == 0:
                    slacks[mp] = tight[mp]
            sol.slacks = slacks
        else:
            sol.slacks = tight
        return sol

    @property
    def layout(self) -> VariableLayout:
        return make_layout(self.scenario, with_slack=self.objective == FAIRNESS)

    @property
    def car_arc_ids(self) -> list[int]:
        return self.scenario.graph.car_arc_ids()

    def demand_flow(self, demand_id: int) -> dict[int, float]:
        """Arc id -> flow for one demand (all arcs, including zeros)."""
        g = self.scenario.graph
        row = self.flows[self.scenario.demand_position(demand_id)]
        return {a.id: float(row[i]) for i, a in enumerate(g.arcs)}

    def user_time(self) -> np.ndarray:
        """Per-demand total user travel time (minutes * users/minute)."""
        return self.flows @ self.scenario.graph.times

    def avg_times(self) -> np.ndarray:
        rates = np.array([d.rate for d in self.scenario.demands])
        return self.user_time() / rates

    def analytic_slacks(self) -> np.ndarray:
        if not len(self.scenario.demands):
            return np.zeros(0)
        return np.maximum(0.0, self.avg_times() - self.scenario.time_threshold)

    def rebalancing_time(self) -> float:
        t = self.scenario.graph.times
        car = self.layout.car_arcs
        return float(sum(t[ap] * self.rebalancing[k] for k, ap in enumerate(car)))

    def fleet_usage(self) -> float:
        t = self.scenario.graph.times
        car = self.layout.car_arcs
        users = self.flows.sum(axis=0)
        return float(sum(t[ap] * (self.rebalancing[k] + users[ap]) for k, ap in enumerate(car)))

    def residuals(self) -> dict[str, float]:
        """Largest violation of each balance family and of the fleet cap."""
        g = self.scenario.graph
        n = len(g.nodes)
        worst_bal = 0.0
        for mp, d in enumerate(self.scenario.demands):
            net = np.zeros(n)
            np.add.at(net, g.tail_pos, self.flows[mp])
            np.subtract.at(net, g.head_pos, self.flows[mp])
            net[g.node_index[d.origin]] -= d.rate
            net[g.node_index[d.destination]] += d.rate
            worst_bal = max(worst_bal, float(np.max(np.abs(net))) if n else 0.0)
        car = self.layout.car_arcs
        users = self.flows.sum(axis=0)
        net = np.zeros(n)
        for k, ap in enumerate(car):
            v = users[ap] + self.rebalancing[k]
            net[g.tail_pos[ap]] += v
            net[g.head_pos[ap]] -= v
        return {
            "flow_balance": worst_bal,
            "car_balance": float(np.max(np.abs(net))) if n else 0.0,
            "fleet_excess": max(0.0, self.fleet_usage() - self.scenario.fleet_cap),
            "min_flow": float(min(self.flows.min(initial=0.0), self.rebalancing.min(initial=0.0))),
        }

    def time_cost(self) -> float:
        return float(self.user_time().sum()) + self.scenario.gamma_reb * self.rebalancing_time()

    def unfairness(self) -> float:
        return flow_metrics(self)["unfairness"]


def region_unfairness(scenario: Scenario, slacks) -> dict[int, float]:
    """Per region: rate-weighted mean slack of a region's demands (0 if no demand rate)."""
    out = {}
    for r in scenario.regions:
        num = den = 0.0
        for m in r.demands:
            d = scenario.demand(m)
            num += d.rate * float(slacks[scenario.demand_position(m)])
            den += d.rate
        out[r.id] = float(num / den) if den > 0 else 0.0
    return out


def population_weighted(scenario: Scenario, per_region: dict[int, float]) -> float:
    n_tot = scenario.total_population
    if n_tot <= 0:
        return 0.0
    return float(sum(r.population * per_region[r.id] for r in scenario.regions) / n_tot)


def flow_metrics(solution: FlowSolution) -> dict:
    sc = solution.scenario
    u = region_unfairness(sc, solution.slacks)
    total = total_demand_rate(sc)
    return {
        "time_cost": solution.time_cost(),
        "unfairness": population_weighted(sc, u),
        "per_region": u,
        "avg_travel_time": float(solution.user_time().sum()) / total if total > 0 else 0.0,
    }


# --------------------------------------------------------------- file format


def dumps_solution(solution: FlowSolution, manifest_id: str = "") -> str:
    g = solution.scenario.graph
    out = io.StringIO()
    out.write(f"# {SOLUTION_FORMAT} objective={solution.objective} manifest={manifest_id}\n")
    out.write("demand_id,arc_id,flow\n")
    for mp, d in enumerate(solution.scenario.demands):
        for ap, a in enumerate(g.arcs):
            v = float(solution.flows[mp, ap])
            if v != 0.0:
                out.write(f"{d.id},{a.id},{v!r}\n")
    for k, ap in enumerate(solution.layout.car_arcs):
        v = float(solution.rebalancing[k])
        if v != 0.0:
            out.write(f"R,{g.arcs[ap].id},{v!r}\n")
    for mp, d in enumerate(solution.scenario.demands):
        out.write(f"E,{d.id},{float(solution.slacks[mp])!r}\n")
    return out.getvalue()


def parse_header(line: str, fmt: str) -> dict[str, str]:
    if not line.startswith("# " + fmt):
        raise DataError(f"expected a '{fmt}' header, got {line.strip()!r}")
    fields = {}
    for tok in line[len("# " + fmt):].split():
        if "=" in tok:
            k, v = tok.split("=", 1)
            fields[k] = v
    return fields


def loads_solution(scenario: Scenario, text: str) -> FlowSolution:
    lines = text.splitlines()
    if len(lines) < 2:
        raise DataError("solution file is empty")
    head = parse_header(lines[0], SOLUTION_FORMAT)
    objective = head.get("objective", TIME)
    if objective not in OBJECTIVES:
        raise DataError(f"solution file: unknown objective {objective!r}")
    if lines[1].strip() != "demand_id,arc_id,flow":
        raise DataError("solution file: missing 'demand_id,arc_id,flow' header")
    g = scenario.graph
    layout = make_layout(scenario, with_slack=objective == FAIRNESS)
    car_k = {g.arcs[ap].id: k for k, ap in enumerate(layout.car_arcs)}
    flows = np.zeros((len(scenario.demands), len(g.arcs)))
    reb = np.zeros(len(layout.car_arcs))
    slacks: dict[int, float] = {}
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        try:
            tag, key, value = line.split(",")
            value = float(value)
            if tag == "R":
                reb[car_k[int(key)]] = value
            elif tag == "E":
                slacks[int(key)] = value
            else:
                flows[scenario.demand_position(int(tag)), g.arc_index[int(key)]] = value
        except (ValueError, KeyError) as exc:
            raise DataError(f"solution file line {lineno}: cannot parse {line!r} ({exc})") from exc
    sol = FlowSolution(scenario, objective, flows, reb, np.zeros(len(scenario.demands)),
                       {"manifest": head.get("manifest", "")})
    tight = sol.analytic_slacks()
    if objective == FAIRNESS:
        sol.slacks = np.array([slacks.get(d.id, tight[i]) for i, d in enumerate(scenario.demands)])
    else:
        sol.slacks = tight
    return sol


def dumps_metrics(solution: FlowSolution, manifest_id: str = "") -> str:
    m = flow_metrics(solution)
    lines = [
        f"# {METRICS_FORMAT} manifest={manifest_id}",
        f"objective = {solution.objective}",
        f"time_cost = {m['time_cost']!r}",
        f"unfairness = {m['unfairness']!r}",
        f"avg_travel_time = {m['avg_travel_time']!r}",
        f"fleet_usage = {solution.fleet_usage()!r}",
        f"fleet_cap = {solution.scenario.fleet_cap!r}",
        f"gamma_reb = {solution.scenario.gamma_reb!r}",
        f"gamma_time = {solution.scenario.gamma_time!r}",
    ]
    lines += [f"unfairness_region_{rid} = {v!r}" for rid, v in m["per_region"].items()]
    return "\n".join(lines) + "\n"
