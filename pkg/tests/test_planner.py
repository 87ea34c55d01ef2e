import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from iamod.errors import DataError, InfeasibleError
from iamod.instances import GraphBuilder, random_scenario
from iamod.network import Layer
from iamod.planner import (
    FAIRNESS,
    TIME,
    assemble_car_balance,
    assemble_fleet_cap,
    assemble_flow_balance,
    assemble_slack_constraints,
    build_problem,
    dumps_metrics,
    dumps_solution,
    flow_metrics,
    loads_solution,
    make_layout,
    objective_time,
    objective_unfairness,
    population_weighted,
    region_unfairness,
    solve,
    solve_min_time,
    solve_min_unfairness,
)
from iamod.scenario import Demand, make_scenario, scaled

from conftest import car_or_walk, walk_chain
from oracles import dijkstra


def _vec(layout, entries):
    x = np.zeros(layout.width)
    for j, v in entries.items():
        x[j] = v
    return x


def _row_value(row, x):
    return sum(c * x[j] for j, c in row.coeffs.items())


# ----------------------------------------------------------------- layout


@given(st.integers(0, 5000), st.integers(1, 5), st.booleans())
def test_layout_blocks_disjoint_and_contiguous(seed, n, slack):
    sc = random_scenario(seed, n)
    lay = make_layout(sc, with_slack=slack)
    m, a, c = len(sc.demands), len(sc.graph.arcs), len(sc.graph.car_arc_ids())
    assert lay.width == m * a + c + (m if slack else 0)
    idx = [lay.flow(i, j) for i in range(m) for j in range(a)] + [lay.reb(k) for k in range(c)]
    if slack:
        idx += [lay.slack(i) for i in range(m)]
    assert sorted(idx) == list(range(lay.width))


# ------------------------------------------------------------ flow balance


def test_flow_balance_chain_rows():
    sc = walk_chain([3, 4], rate=2.0)  # o -> w0 -> d
    lay = make_layout(sc)
    rows = {r.name: r for r in assemble_flow_balance(sc, lay)}
    g = sc.graph
    assert rows["b0_0"].coeffs == {lay.flow(0, g.arc_index[0]): 1.0} and rows["b0_0"].rhs == 2.0
    assert rows["b0_1"].coeffs == {lay.flow(0, g.arc_index[1]): -1.0} and rows["b0_1"].rhs == -2.0


def test_flow_balance_idle_node_gets_zero_row():
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    gb.node(Layer.WALK, "w")
    gb.node(Layer.BIKE, "idle")
    gb.arc("o", "w", 1, switch=True)
    gb.arc("w", "d", 1, switch=True)
    sc = make_scenario(gb.build(), [Demand(0, 0, 1, 1.0, 1)], {1: 1.0}, 0.0, 20.0)
    rows = {r.name: r for r in assemble_flow_balance(sc, make_layout(sc))}
    assert rows["b0_3"].coeffs == {} and rows["b0_3"].rhs == 0.0


def test_flow_balance_diamond_any_split():
    sc = car_or_walk((1, 5, 1), (1, 5, 1))
    lay = make_layout(sc)
    rows = assemble_flow_balance(sc, lay)
    g = sc.graph
    car = [0, 1, 3]  # o->c1, c1->c2, c2->d
    walk = [4, 5, 6]
    for lam in np.linspace(0, 1, 11):
        x = _vec(lay, {**{lay.flow(0, g.arc_index[a]): lam for a in car},
                       **{lay.flow(0, g.arc_index[a]): 1 - lam for a in walk}})
        assert all(abs(_row_value(r, x) - r.rhs) < 1e-12 for r in rows)


# ------------------------------------------------------------- car balance


def test_car_loop_needs_rebalancing():
    sc = car_or_walk((0, 5, 0), (0, 50, 0), rate=1.0)
    sol = solve_min_time(sc)
    g = sc.graph
    assert sol.flows[0, g.arc_index[1]] == pytest.approx(1.0)
    back = sol.layout.car_arcs.index(g.arc_index[2])
    assert sol.rebalancing[back] == pytest.approx(1.0)


def test_car_without_return_arc_is_infeasible():
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    gb.node(Layer.CAR, "c1")
    gb.node(Layer.CAR, "c2")
    gb.arc("o", "c1", 1, switch=True)
    gb.arc("c1", "c2", 5)
    gb.arc("c2", "d", 1, switch=True)
    sc = make_scenario(gb.build(), [Demand(0, 0, 1, 1.0, 1)], {1: 1.0}, 1e6, 20.0)
    with pytest.raises(InfeasibleError):
        solve_min_time(sc)


def test_no_car_use_means_no_rebalancing():
    sol = solve_min_time(car_or_walk((1, 50, 1), (1, 5, 1)))
    assert np.all(sol.rebalancing == 0)


def test_symmetric_car_demands_need_no_rebalancing():
    gb = GraphBuilder()
    for lbl in ("o1", "o2"):
        gb.node(Layer.ORIGIN, lbl)
    for lbl in ("d1", "d2"):
        gb.node(Layer.DESTINATION, lbl)
    gb.node(Layer.CAR, "c1")
    gb.node(Layer.CAR, "c2")
    gb.both("c1", "c2", 6)
    gb.arc("o1", "c1", 1, switch=True)
    gb.arc("c2", "d1", 1, switch=True)
    gb.arc("o2", "c2", 1, switch=True)
    gb.arc("c1", "d2", 1, switch=True)
    ids = gb.by_label
    sc = make_scenario(gb.build(), [Demand(0, ids["o1"], ids["d1"], 1.5, 1),
                                    Demand(1, ids["o2"], ids["d2"], 1.5, 1)], {1: 1.0}, 1e6, 20.0)
    sol = solve_min_time(sc)
    assert np.all(np.abs(sol.rebalancing) < 1e-12)
    assert sol.residuals()["car_balance"] < 1e-9


# ---------------------------------------------------------------- fleet cap


def test_fleet_row_counts_vehicles():
    sc = car_or_walk((0, 10, 0), (1, 1, 1), rate=2.0)
    lay = make_layout(sc)
    row = assemble_fleet_cap(sc, lay)
    x = _vec(lay, {lay.flow(0, sc.graph.arc_index[1]): 2.0})
    assert _row_value(row, x) == pytest.approx(20.0)
    assert row.sense == "<=" and row.rhs == sc.fleet_cap


def test_zero_fleet_forbids_cars():
    sol = solve_min_time(car_or_walk((1, 2, 1), (1, 30, 1), fleet_cap=0.0))
    car = [ap for ap in sol.layout.car_arcs]
    assert np.all(sol.flows[:, car] == 0) and np.all(sol.rebalancing == 0)
    assert sol.avg_times()[0] == pytest.approx(32.0)


def test_binding_cap_is_active(demo):
    sol = solve_min_time(demo)
    assert sol.fleet_usage() == pytest.approx(demo.fleet_cap, rel=1e-9)


# ---------------------------------------------------------------- objectives


def test_time_objective_coefficients():
    sc = car_or_walk((1, 5, 1), (1, 9, 1))
    lay = make_layout(sc)
    c = objective_time(sc, lay)
    k = lay.car_arcs.index(sc.graph.arc_index[1])
    assert c[lay.flow(0, sc.graph.arc_index[1])] == 5.0
    assert c[lay.reb(k)] == pytest.approx(0.005)


def test_zero_times_zero_objective():
    sc = walk_chain([0, 0, 0])
    assert objective_time(sc, make_layout(sc)) == {}
    assert solve_min_time(sc).time_cost() == 0.0


def test_unfairness_weights_single_and_symmetric():
    sc = walk_chain([1, 1])
    lay = make_layout(sc, with_slack=True)
    assert objective_unfairness(sc, lay)[lay.slack(0)] == 1.0
    gb = GraphBuilder()
    for i in range(2):
        gb.node(Layer.ORIGIN, f"o{i}")
        gb.node(Layer.DESTINATION, f"d{i}")
    gb.node(Layer.WALK, "w")
    for i in range(2):
        gb.arc(f"o{i}", "w", 1, switch=True)
        gb.arc("w", f"d{i}", 1, switch=True)
    ids = gb.by_label
    sc = make_scenario(gb.build(), [Demand(0, ids["o0"], ids["d0"], 1.0, 0),
                                    Demand(1, ids["o1"], ids["d1"], 4.0, 1)], {0: 5.0, 1: 5.0}, 0.0, 20.0)
    lay = make_layout(sc, with_slack=True)
    c = objective_unfairness(sc, lay)
    assert c[lay.slack(0)] == 0.5 and c[lay.slack(1)] == 0.5
    # flow coefficients are the time objective scaled by gamma_time
    ct = objective_time(sc, lay)
    assert all(c[j] == pytest.approx(sc.gamma_time * v) for j, v in ct.items())


def test_slack_row_divides_by_rate():
    sc = walk_chain([5, 15, 5], rate=2.0, threshold=20.0)
    lay = make_layout(sc, with_slack=True)
    (row,) = assemble_slack_constraints(sc, lay)
    assert row.rhs == 20.0 and row.coeffs[lay.slack(0)] == -1.0
    x = _vec(lay, {lay.flow(0, ap): 2.0 for ap in range(3)})  # t.x = 50
    assert _row_value(row, x) + 1.0 * 0 == pytest.approx(25.0)


# ------------------------------------------------------------------- solves


def test_single_walk_chain():
    sc = walk_chain([2, 6, 2], rate=1.5)
    sol = solve_min_time(sc)
    assert np.allclose(sol.flows[0], 1.5)
    assert sol.slacks[0] == 0.0


def test_unreachable_destination_infeasible():
    gb = GraphBuilder()
    gb.node(Layer.ORIGIN, "o")
    gb.node(Layer.DESTINATION, "d")
    gb.node(Layer.WALK, "w1")
    gb.node(Layer.WALK, "w2")
    gb.arc("o", "w1", 1, switch=True)
    gb.arc("w2", "d", 1, switch=True)
    sc = make_scenario(gb.build(), [Demand(0, 0, 1, 1.0, 1)], {1: 1.0}, 0.0, 20.0)
    for obj in (TIME, FAIRNESS):
        with pytest.raises(InfeasibleError):
            solve(sc, obj)


def test_generous_cap_takes_car_and_matches_dijkstra():
    sc = car_or_walk((2, 6, 1), (1, 20, 1), rate=3.0)
    sol = solve_min_time(sc)
    g = sc.graph
    assert sol.flows[0, g.arc_index[1]] == pytest.approx(3.0)
    expected = 3.0 * dijkstra(g, 0, 1) + sc.gamma_reb * 6 * 3.0
    assert sol.time_cost() == pytest.approx(expected, rel=1e-9)


def test_slack_tight_examples():
    sol = solve_min_unfairness(walk_chain([5, 15, 5], rate=2.0))
    assert sol.slacks[0] == pytest.approx(5.0)
    assert sol.user_time()[0] == pytest.approx(50.0)
    sol = solve_min_unfairness(walk_chain([2, 8, 2]))
    assert sol.slacks[0] == 0.0


def test_all_satisfiable_gives_zero_unfairness(demo):
    big = make_scenario(demo.graph, demo.demands, {r.id: r.population for r in demo.regions}, 1e6, 20.0)
    assert solve_min_unfairness(big).unfairness() == pytest.approx(0.0, abs=1e-12)


def test_zero_fleet_forced_violation():
    sol = solve_min_unfairness(car_or_walk((1, 1, 1), (1, 23, 1), fleet_cap=0.0))
    assert sol.unfairness() == pytest.approx(5.0)


def _competing():
    """Two demands, separate car loops, fleet enough for half a demand."""
    gb = GraphBuilder()
    for tag in ("A", "B"):
        gb.node(Layer.ORIGIN, f"o{tag}")
        gb.node(Layer.DESTINATION, f"d{tag}")
        gb.node(Layer.CAR, f"c1{tag}")
        gb.node(Layer.CAR, f"c2{tag}")
        gb.node(Layer.WALK, f"w1{tag}")
        gb.node(Layer.WALK, f"w2{tag}")
        gb.arc(f"o{tag}", f"c1{tag}", 0, switch=True)
        gb.both(f"c1{tag}", f"c2{tag}", 10)
        gb.arc(f"c2{tag}", f"d{tag}", 0, switch=True)
        gb.arc(f"o{tag}", f"w1{tag}", 0, switch=True)
        gb.arc(f"w1{tag}", f"w2{tag}", 30 if tag == "A" else 24)
        gb.arc(f"w2{tag}", f"d{tag}", 0, switch=True)
    ids = gb.by_label
    demands = [Demand(0, ids["oA"], ids["dA"], 1.0, 1), Demand(1, ids["oB"], ids["dB"], 1.0, 2)]
    return make_scenario(gb.build(), demands, {1: 100.0, 2: 100.0}, 10.0, 20.0)


def test_competing_demands_match_grid_search():
    sc = _competing()
    sol = solve_min_unfairness(sc)

    # car fraction f costs 20 f vehicles (10 out, 10 back); f_A + f_B <= 0.5
    def unfairness_at(fa, fb):
        return 0.5 * max(0.0, 30 - 20 * fa - 20) + 0.5 * max(0.0, 24 - 14 * fb - 20)

    grid = np.linspace(0, 0.5, 1001)
    best = min(unfairness_at(fa, fb) for fa in grid for fb in grid[grid <= 0.5 - fa + 1e-12])
    assert best == pytest.approx(2.0)
    assert sol.unfairness() == pytest.approx(best, abs=1e-6)
    assert sol.slacks == pytest.approx([0.0, 4.0], abs=1e-9)


def test_region_unfairness_arithmetic():
    gb = GraphBuilder()
    for i in range(2):
        gb.node(Layer.ORIGIN, f"o{i}")
        gb.node(Layer.DESTINATION, f"d{i}")
    gb.node(Layer.WALK, "w")
    for i in range(2):
        gb.arc(f"o{i}", "w", 1, switch=True)
        gb.arc("w", f"d{i}", 1, switch=True)
    ids = gb.by_label
    sc = make_scenario(gb.build(), [Demand(0, ids["o0"], ids["d0"], 1.0, 1),
                                    Demand(1, ids["o1"], ids["d1"], 3.0, 1)], {1: 10.0, 2: 5.0}, 0.0, 20.0)
    u = region_unfairness(sc, [2.0, 0.0])
    assert u == {1: 0.5, 2: 0.0}
    assert population_weighted(sc, u) == pytest.approx(0.5 * 10 / 15)
    assert region_unfairness(sc, [0.0, 0.0]) == {1: 0.0, 2: 0.0}


def test_competing_orderings():
    sc = _competing()
    fast, fair = solve_min_time(sc), solve_min_unfairness(sc)
    assert fast.time_cost() <= fair.time_cost() + 1e-9
    assert fair.unfairness() <= fast.unfairness() + 1e-9


# ---------------------------------------------------------------- properties


def _fleet_cases():
    return st.tuples(st.integers(0, 100_000), st.integers(1, 5), st.sampled_from([1e6, 40.0, 15.0, 0.0]))


@given(_fleet_cases())
def test_feasibility_residuals(case):
    seed, n, cap = case
    sc = random_scenario(seed, n, fleet_cap=cap)
    for obj in (TIME, FAIRNESS):
        sol = solve(sc, obj)
        r = sol.residuals()
        amax = max(d.rate for d in sc.demands)
        assert r["flow_balance"] <= 1e-6 * max(1, amax)
        assert r["car_balance"] <= 1e-6 * max(1, amax)
        assert r["fleet_excess"] <= 1e-6
        assert r["min_flow"] >= -1e-9


@given(_fleet_cases())
def test_objective_dominance(case):
    seed, n, cap = case
    sc = random_scenario(seed, n, fleet_cap=cap)
    fast, fair = solve_min_time(sc), solve_min_unfairness(sc)
    assert fast.time_cost() <= fair.time_cost() + 1e-6 * max(1, fast.time_cost())
    assert fair.unfairness() <= fast.unfairness() + 1e-6


@given(_fleet_cases())
def test_slacks_match_closed_form(case):
    seed, n, cap = case
    sol = solve_min_unfairness(random_scenario(seed, n, fleet_cap=cap))
    assert np.max(np.abs(sol.slacks - sol.analytic_slacks())) <= 1e-6


@given(_fleet_cases(), st.sampled_from([0.1, 3.0, 10.0]))
def test_scale_invariance(case, k):
    seed, n, cap = case
    sc = random_scenario(seed, n, fleet_cap=cap)
    for obj in (TIME, FAIRNESS):
        a, b = solve(sc, obj), solve(scaled(sc, k), obj)
        assert np.allclose(b.flows, k * a.flows, rtol=1e-9, atol=1e-9 * k)
        assert np.allclose(b.slacks, a.slacks, atol=1e-9)
        assert b.unfairness() == pytest.approx(a.unfairness(), abs=1e-9)


@given(_fleet_cases())
def test_optimal_supports_acyclic(case):
    import networkx as nx

    seed, n, cap = case
    sc = random_scenario(seed, n, fleet_cap=cap)
    g = sc.graph
    for obj in (TIME, FAIRNESS):
        sol = solve(sc, obj)
        for mp in range(len(sc.demands)):
            dg = nx.DiGraph()
            dg.add_edges_from((g.arcs[ap].tail, g.arcs[ap].head)
                              for ap in np.flatnonzero(sol.flows[mp] > 1e-9))
            assert nx.is_directed_acyclic_graph(dg)


@given(st.integers(0, 100_000), st.integers(1, 5))
def test_min_time_matches_dijkstra_with_loose_fleet(seed, n):
    sc = random_scenario(seed, n)
    sol = solve_min_time(sc)
    oracle = sum(d.rate * dijkstra(sc.graph, d.origin, d.destination) for d in sc.demands)
    users = float(sol.user_time().sum())
    assert users == pytest.approx(oracle, rel=1e-6)
    assert sol.time_cost() == pytest.approx(users + sc.gamma_reb * sol.rebalancing_time(), rel=1e-12)
    if not np.any(sol.flows[:, sol.layout.car_arcs] > 0):
        assert sol.rebalancing_time() == 0.0


def test_metrics_fields(demo):
    sol = solve_min_time(demo)
    m = flow_metrics(sol)
    assert set(m) == {"time_cost", "unfairness", "per_region", "avg_travel_time"}
    assert all(type(v) is float for v in m["per_region"].values())
    assert m["avg_travel_time"] == pytest.approx(sol.user_time().sum() / sum(d.rate for d in demo.demands))


def test_solution_file_round_trip(demo):
    for obj in (TIME, FAIRNESS):
        sol = solve(demo, obj)
        text = dumps_solution(sol, "abc")
        again = loads_solution(demo, text)
        assert np.array_equal(again.flows, sol.flows)
        assert np.array_equal(again.rebalancing, sol.rebalancing)
        assert np.array_equal(again.slacks, sol.slacks)
        assert dumps_solution(again, "abc") == text
        assert dumps_metrics(again, "abc") == dumps_metrics(sol, "abc")
        assert text.startswith(f"# iamod-solution v1 objective={obj} manifest=abc\ndemand_id,arc_id,flow\n")


def test_bad_solution_files(demo):
    with pytest.raises(DataError):
        loads_solution(demo, "")
    with pytest.raises(DataError):
        loads_solution(demo, "# something else\n")
    with pytest.raises(DataError):
        loads_solution(demo, "# iamod-solution v1 objective=time\ndemand_id,arc_id,flow\n0,9999,1.0\n")
    with pytest.raises(DataError):
        build_problem(demo, "speed")


def test_deterministic_solution(demo):
    a, b = solve_min_unfairness(demo), solve_min_unfairness(demo)
    assert dumps_solution(a) == dumps_solution(b)
