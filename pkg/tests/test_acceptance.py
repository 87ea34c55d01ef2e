"""Acceptance suite: one test per primary criterion, each printing PASS or FAIL.

Run with ``pytest tests/test_acceptance.py -s`` to see the summary lines
interleaved with pytest's own output; they are printed even without ``-s``.
"""

import json
import os
import time

import numpy as np
import pytest

from iamod.cli import main
from iamod.instances import demo_scenario, diamond_gap_scenario, random_scenario
from iamod.lp import export_mps, import_solution, solve_simplex
from iamod.pathalloc import (
    SupportSubgraph,
    allocate_all,
    build_path_lp,
    cancel_cycles,
    enumerate_paths,
    extract_support,
    path_unfairness_summary,
)
from iamod.planner import FAIRNESS, TIME, build_problem, region_unfairness, solve
from iamod.scenario import save_scenario, scaled

from conftest import car_or_walk, walk_chain
from oracles import dijkstra, vertex_enumeration

SUITE_SEEDS = range(20)
SUITE_CAPS = (1e6, 40.0, 15.0, 0.0)


def _suite():
    """The random suite: 20 scenarios under four fleet caps, from loose to none."""
    for seed in SUITE_SEEDS:
        for cap in SUITE_CAPS:
            yield random_scenario(seed, 1 + seed % 5, fleet_cap=cap)


@pytest.fixture
def verdict(capsys):
    def record(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return record


def test_criterion_1_shortest_path_oracle(verdict):
    start = time.perf_counter()
    worst, problems = 0.0, []
    for seed in SUITE_SEEDS:
        sc = random_scenario(seed, 1 + seed % 5)
        g = sc.graph
        assert len(g.nodes) <= 30 and len(g.arcs) <= 80 and len(sc.demands) <= 5
        sol = solve(sc, TIME)
        assert sol.fleet_usage() < sc.fleet_cap  # cap does not bind
        oracle = sum(d.rate * dijkstra(g, d.origin, d.destination) for d in sc.demands)
        expected = oracle + sc.gamma_reb * sol.rebalancing_time()
        rel = abs(sol.time_cost() - expected) / max(1.0, abs(expected))
        worst = max(worst, rel)
        uses_cars = np.any(sol.flows[:, sol.layout.car_arcs] > 0)
        if rel > 1e-6 or (not uses_cars and sol.rebalancing_time() != 0.0):
            problems.append(seed)
    elapsed = time.perf_counter() - start
    verdict(1, not problems and elapsed < 10.0,
            f"20 scenarios, worst rel err {worst:.2e}, {elapsed:.2f}s, failing seeds {problems}")


def _tiny_planner_cases():
    for cap in (0.0, 3.0, 10.0, 1e3):
        yield car_or_walk((2, 5, 1), (1, 25, 1), fleet_cap=cap)
        yield car_or_walk((0, 12, 0), (3, 16, 3), rate=2.0, fleet_cap=cap)
    yield diamond_gap_scenario()
    yield walk_chain([1, 8, 6, 1])


def _tiny_path_cases():
    arcs = [(0, 0, 1, 5.0, 0.6), (1, 0, 1, 12.0, 0.4), (2, 1, 2, 6.0, 0.3), (3, 1, 2, 16.0, 0.7)]
    sup = SupportSubgraph.from_arcs(0, 0, 2, arcs)
    yield enumerate_paths(sup), sup, 20.0
    for sc in (diamond_gap_scenario(), demo_scenario()):
        for obj in (TIME, FAIRNESS):
            sol = solve(sc, obj)
            for d in sc.demands:
                sup = cancel_cycles(extract_support(sol, d.id))
                ps = enumerate_paths(sup)
                if ps.count <= 8:
                    yield ps, sup, sc.time_threshold


def test_criterion_2_exhaustive_lp_oracle(verdict):
    start = time.perf_counter()
    checked, worst = 0, 0.0
    for sc in _tiny_planner_cases():
        assert len(sc.demands) * len(sc.graph.arcs) <= 8
        for obj in (TIME, FAIRNESS):
            model = build_problem(sc, obj).model
            best, _ = vertex_enumeration(model)
            ours = solve_simplex(model)
            if best is None:
                assert ours.status.value == "infeasible"
                continue
            worst = max(worst, abs(best - ours.objective_value) / max(1.0, abs(best)))
            checked += 1
    for ps, sup, threshold in _tiny_path_cases():
        model = build_path_lp(ps, sup, threshold)
        best, _ = vertex_enumeration(model)
        worst = max(worst, abs(best - solve_simplex(model).objective_value) / max(1.0, abs(best)))
        checked += 1
    elapsed = time.perf_counter() - start
    verdict(2, worst <= 1e-6 and elapsed < 5.0,
            f"{checked} LPs, worst rel gap {worst:.2e}, {elapsed:.2f}s")


def test_criterion_3_demo_orderings(verdict):
    sc = demo_scenario()
    fast, fair = solve(sc, TIME), solve(sc, FAIRNESS)
    path_fast = path_unfairness_summary(allocate_all(fast).per_demand, sc)
    path_fair = path_unfairness_summary(allocate_all(fair).per_demand, sc)
    tol = 1e-6
    checks = {
        "cap binds": fast.fleet_usage() >= sc.fleet_cap - tol,
        "time(time) <= time(fairness)": fast.time_cost() <= fair.time_cost() + tol,
        "unfair(fairness) <= unfair(time)": fair.unfairness() <= fast.unfairness() + tol,
        "path >= flow for time": path_fast >= fast.unfairness() - tol,
        "path >= flow for fairness": path_fair >= fair.unfairness() - tol,
        "unfair(fairness) == 0": abs(fair.unfairness()) <= tol,
    }
    failed = [k for k, ok in checks.items() if not ok]
    verdict(3, not failed,
            f"time {fast.time_cost():.4f} vs {fair.time_cost():.4f}, unfairness {fast.unfairness():.4f} "
            f"vs {fair.unfairness():.4f}, path {path_fast:.4f} / {path_fair:.4f}, failed {failed}")


def test_criterion_4_slack_tightness(verdict):
    worst, n = 0.0, 0
    for sc in _suite():
        sol = solve(sc, FAIRNESS)
        worst = max(worst, float(np.max(np.abs(sol.slacks - sol.analytic_slacks()))))
        n += 1
    verdict(4, worst <= 1e-6, f"{n} optima, worst slack gap {worst:.2e}")


def test_criterion_5_decomposition_contract(verdict):
    worst_res, worst_mass, removed, n = 0.0, 0.0, 0.0, 0
    errors = []
    scenarios = [demo_scenario(), diamond_gap_scenario(), *_suite()]
    for sc in scenarios:
        for obj in (TIME, FAIRNESS):
            res = allocate_all(solve(sc, obj))
            errors.extend(res.errors.values())
            for a in res.per_demand:
                worst_res = max(worst_res, a.residual)
                worst_mass = max(worst_mass, abs(a.path_time_mass - a.flow_time))
                removed = max(removed, a.removed_cycle_time)
                n += 1
    ok = not errors and worst_res <= 1e-9 and worst_mass <= 1e-6 and removed == 0.0
    verdict(5, ok, f"{n} demands, max residual {worst_res:.2e}, max time gap {worst_mass:.2e}, "
                   f"removed cycle time {removed}, errors {errors[:3]}")


def test_criterion_6_diamond_gap(verdict):
    sc = diamond_gap_scenario()
    details, ok = [], True
    for obj in (TIME, FAIRNESS):
        sol = solve(sc, obj)
        (alloc,) = allocate_all(sol).per_demand
        times = sorted(alloc.pathset.path_times)
        ok &= times == pytest.approx([15.0, 25.0], abs=1e-12)
        ok &= sorted(alloc.fractions) == pytest.approx([0.5, 0.5], abs=1e-9)
        ok &= abs(sol.slacks[0]) <= 1e-9
        ok &= abs(alloc.objective - 2.5) <= 1e-9
        details.append(f"{obj}: flow slack {sol.slacks[0]:.2g}, path excess {alloc.objective:.12g}")
    verdict(6, ok, "; ".join(details))


def test_criterion_7_scale_invariance(verdict):
    worst_inv, worst_flow, n = 0.0, 0.0, 0
    for sc in [demo_scenario(), diamond_gap_scenario(), *_suite()]:
        big = scaled(sc, 10.0)
        for obj in (TIME, FAIRNESS):
            a, b = solve(sc, obj), solve(big, obj)
            ua = region_unfairness(sc, a.slacks)
            ub = region_unfairness(big, b.slacks)
            inv = max(float(np.max(np.abs(a.slacks - b.slacks))),
                      max(abs(ua[r] - ub[r]) for r in ua),
                      abs(a.unfairness() - b.unfairness()))
            scale = np.maximum(1.0, np.abs(10.0 * a.flows))
            worst_inv = max(worst_inv, inv)
            worst_flow = max(worst_flow, float(np.max(np.abs(b.flows - 10.0 * a.flows) / scale)))
            n += 1
    verdict(7, worst_inv <= 1e-9 and worst_flow <= 1e-9,
            f"{n} solves, worst invariant drift {worst_inv:.2e}, worst flow rel err {worst_flow:.2e}")


def test_criterion_8_mps_round_trip(verdict, tmp_path):
    pytest.importorskip("highspy")
    from oracles import highs_solve_mps

    details, ok = [], True
    for obj in (TIME, FAIRNESS):
        problem = build_problem(demo_scenario(), obj)
        ours = solve_simplex(problem.model).objective_value
        lines, _ = highs_solve_mps(export_mps(problem.model), tmp_path)
        imported = import_solution(problem.model, lines)
        rel = abs(imported.objective_value - ours) / max(1.0, abs(ours))
        ok &= not imported.infeasible_import and rel <= 1e-6
        details.append(f"{obj}: {imported.objective_value:.10g} vs {ours:.10g}")
    verdict(8, ok, "; ".join(details))


def _pipeline(scenario_dir, out):
    for obj in (TIME, FAIRNESS):
        assert main(["solve", "--scenario", scenario_dir, "--objective", obj, "--out", out]) == 0
        assert main(["allocate", "--scenario", scenario_dir, "--objective", obj, "--out", out]) == 0
    assert main(["report", "--scenario", scenario_dir, "--out", out, "--svg"]) == 0
    files = {}
    for name in sorted(os.listdir(out)):
        with open(os.path.join(out, name), encoding="utf-8") as fh:
            text = fh.read()
        if name.startswith("manifest_"):
            doc = json.loads(text)
            doc.pop("timestamp", None)
            text = json.dumps(doc, sort_keys=True)
        files[name] = text
    return files


def test_criterion_9_determinism(verdict, tmp_path, capsys):
    scen = str(tmp_path / "scenario")
    save_scenario(demo_scenario(), scen)
    first = _pipeline(scen, str(tmp_path / "a"))
    second = _pipeline(scen, str(tmp_path / "b"))
    capsys.readouterr()
    differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
    verdict(9, not differing and len(first) >= 15,
            f"{len(first)} output files compared, differing {differing}")
