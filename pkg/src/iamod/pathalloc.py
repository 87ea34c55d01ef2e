"""Decompose optimal per-demand flows into paths of maximum accessibility.

For each demand: keep the arcs that carry flow, cancel any directed cycles,
enumerate every simple origin-destination path of what is left, then solve a
small LP choosing path fractions that reproduce the arc flows exactly while
putting as little weight as possible on paths slower than the threshold
(weighted by how much slower they are).

Flows are normalized by the demand rate by default, so fractions lie in
[0, 1] and sum to one. Pass ``normalize=False`` to work in users/minute.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from iamod import kernels
from iamod.errors import EmptySupport, IamodError, PathExplosion, ReconstructionInfeasible
from iamod.lp import EQ, LpModel, Status, solve_simplex
from iamod.planner import FlowSolution, population_weighted, region_unfairness

log = logging.getLogger(__name__)

DEFAULT_SUPPORT_TOL = 1e-9
DEFAULT_PATH_CAP = 100_000


@dataclass(frozen=True)
class SupportSubgraph:
    """Arcs carrying flow for one demand.

    ``flow`` maps arc id to carried flow, divided by the demand rate
    ``scale`` when ``normalized``. ``removed`` records flow taken off each arc by cycle
    canceling and ``removed_time`` its travel-time mass.
    """

    demand_id: int
    origin: int
    destination: int
    flow: dict
    tol: float
    scale: float
    times: dict
    removed: dict = field(default_factory=dict)
    removed_time: float = 0.0
    tails: dict = field(default_factory=dict)
    heads: dict = field(default_factory=dict)
    normalized: bool = True

    @classmethod
    def from_arcs(cls, demand_id: int, origin: int, destination: int, arcs,
                  tol: float = DEFAULT_SUPPORT_TOL) -> "SupportSubgraph":
        """Build from ``(arc_id, tail, head, travel_time, flow)`` tuples.

        Flows are taken as already normalized; arcs at or below ``tol`` are
        left out.
        """
        kept = [a for a in arcs if a[4] > tol]
        return cls(
            demand_id=demand_id, origin=origin, destination=destination,
            flow={a[0]: float(a[4]) for a in kept}, tol=tol, scale=1.0,
            times={a[0]: float(a[3]) for a in kept},
            tails={a[0]: a[1] for a in kept}, heads={a[0]: a[2] for a in kept},
        )

    @property
    def arcs(self) -> list[int]:
        return sorted(self.flow)

    @property
    def nodes(self) -> set:
        out = set()
        for a in self.flow:
            out.add(self.tails[a])
            out.add(self.heads[a])
        return out

    def imbalance(self) -> dict:
        """Net outflow per node."""
        net: dict = {}
        for a, v in self.flow.items():
            net[self.tails[a]] = net.get(self.tails[a], 0.0) + v
            net[self.heads[a]] = net.get(self.heads[a], 0.0) - v
        return net

    def total_time(self) -> float:
        return math.fsum(self.times[a] * v for a, v in self.flow.items())


@dataclass(frozen=True)
class PathSet:
    demand_id: int
    paths: tuple  # tuples of arc ids
    path_times: tuple
    node_sequences: tuple

    @property
    def count(self) -> int:
        return len(self.paths)


@dataclass
class PathAllocation:
    demand_id: int
    pathset: PathSet
    fractions: np.ndarray
    objective: float  # sum_p max(0, t_p - threshold) * f_p
    residual: float  # max arc reconstruction error
    path_time_mass: float  # sum_p t_p f_p
    flow_time: float  # t . x of the cycle-canceled support
    removed_cycle_time: float
    scale: float
    threshold: float
    normalized: bool = True
    mode: str = "lp"

    @property
    def excess(self) -> np.ndarray:
        return np.maximum(0.0, np.asarray(self.pathset.path_times) - self.threshold)

    @property
    def normalized_objective(self) -> float:
        """Per-user path-level excess (minutes), whatever the normalization."""
        return self.objective if self.normalized else self.objective / self.scale


def extract_support(solution: FlowSolution, demand_id: int, support_tol: float = DEFAULT_SUPPORT_TOL,
                    normalize: bool = True) -> SupportSubgraph:
    sc = solution.scenario
    g = sc.graph
    d = sc.demand(demand_id)
    scale = d.rate
    row = solution.flows[sc.demand_position(demand_id)]
    flow = {}
    for ap, a in enumerate(g.arcs):
        v = float(row[ap]) / scale if normalize else float(row[ap])
        if v > support_tol:
            flow[a.id] = v
    if not flow:
        raise EmptySupport(f"demand {demand_id} carries no flow above {support_tol:g}")
    return SupportSubgraph(
        demand_id=demand_id,
        origin=d.origin,
        destination=d.destination,
        flow=flow,
        tol=support_tol,
        scale=scale,
        times={a: float(g.arc(a).travel_time) for a in flow},
        tails={a: g.arc(a).tail for a in flow},
        heads={a: g.arc(a).head for a in flow},
        normalized=normalize,
    )


def _local_csr(support: SupportSubgraph, arcs: list[int]):
    nodes = sorted({support.tails[a] for a in arcs} | {support.heads[a] for a in arcs}
                   | {support.origin, support.destination})
    pos = {n: i for i, n in enumerate(nodes)}
    tails = [pos[support.tails[a]] for a in arcs]
    heads = [pos[support.heads[a]] for a in arcs]
    indptr, csr_arc, csr_head = kernels.csr(len(nodes), tails, heads)
    return nodes, pos, indptr, csr_arc, csr_head


def cancel_cycles(support: SupportSubgraph) -> SupportSubgraph:
    """Remove circulating flow so the support becomes acyclic.

    Node imbalances are unchanged. Arcs left with flow at or below the
    support tolerance are dropped.
    """
    arcs = support.arcs
    _, _, indptr, csr_arc, csr_head = _local_csr(support, arcs)
    flow = [support.flow[a] for a in arcs]
    removed, n_cycles = kernels.cancel_cycles(indptr, csr_arc, csr_head, flow, support.tol)
    if n_cycles == 0:
        return support
    new_flow = {a: v for a, v in zip(arcs, flow) if v > support.tol}
    rem = dict(support.removed)
    for a, r in zip(arcs, removed):
        if r:
            rem[a] = rem.get(a, 0.0) + r
    removed_time = support.removed_time + math.fsum(support.times[a] * r for a, r in zip(arcs, removed))
    log.warning("demand %s: canceled %d flow cycle(s), time mass %.3g removed",
                support.demand_id, n_cycles, removed_time)
    keep = set(new_flow)
    return replace(
        support,
        flow=new_flow,
        removed=rem,
        removed_time=removed_time,
        times={a: t for a, t in support.times.items() if a in keep},
        tails={a: t for a, t in support.tails.items() if a in keep},
        heads={a: h for a, h in support.heads.items() if a in keep},
    )


def enumerate_paths(support: SupportSubgraph, origin: Optional[int] = None,
                    destination: Optional[int] = None, cap: int = DEFAULT_PATH_CAP) -> PathSet:
    """All simple origin->destination paths of the support, lexicographic by arc id."""
    origin = support.origin if origin is None else origin
    destination = support.destination if destination is None else destination
    arcs = support.arcs
    nodes, pos, indptr, csr_arc, csr_head = _local_csr(support, arcs)
    raw, overflow = kernels.enumerate_paths(indptr, csr_arc, csr_head, pos[origin], pos[destination], cap)
    if overflow:
        raise PathExplosion(len(raw), cap)
    paths, times, seqs = [], [], []
    for p in raw:
        ids = tuple(arcs[k] for k in p)
        paths.append(ids)
        times.append(math.fsum(support.times[a] for a in ids))
        seqs.append((origin,) + tuple(support.heads[a] for a in ids))
    return PathSet(support.demand_id, tuple(paths), tuple(times), tuple(seqs))


def build_path_lp(pathset: PathSet, support: SupportSubgraph, threshold: float) -> LpModel:
    """One fraction per path, costed by its excess; one equality per support arc."""
    excess = np.maximum(0.0, np.asarray(pathset.path_times) - threshold)
    ub = 1.0 if support.normalized else support.scale
    lp = LpModel(name=f"ALLOC{pathset.demand_id}")
    for p in range(pathset.count):
        lp.add_var(f"f{p}", 0.0, ub, float(excess[p]))
    uses: dict = {a: {} for a in support.arcs}
    for p, path in enumerate(pathset.paths):
        for a in path:
            uses[a][p] = 1.0
    for a in support.arcs:
        lp.add_row(uses[a], EQ, support.flow[a], f"a{a}")
    return lp


def allocate_paths(pathset: PathSet, support: SupportSubgraph, threshold: float) -> PathAllocation:
    """Path fractions reproducing the support flow with least excess time."""
    if pathset.count == 0:
        raise ReconstructionInfeasible(f"demand {pathset.demand_id}: no origin-destination path")
    excess = np.maximum(0.0, np.asarray(pathset.path_times) - threshold)
    arcs = support.arcs
    ub = 1.0 if support.normalized else support.scale
    sol = solve_simplex(build_path_lp(pathset, support, threshold))
    if sol.status is not Status.OPTIMAL:
        raise ReconstructionInfeasible(
            f"demand {pathset.demand_id}: path LP ended {sol.status.value}"
        )
    f = np.clip(sol.x, 0.0, ub)
    recon = {a: 0.0 for a in arcs}
    for p, path in enumerate(pathset.paths):
        for a in path:
            recon[a] += f[p]
    residual = max((abs(recon[a] - support.flow[a]) for a in arcs), default=0.0)
    return PathAllocation(
        demand_id=pathset.demand_id,
        pathset=pathset,
        fractions=f,
        objective=float(excess @ f),
        residual=residual,
        path_time_mass=float(np.dot(pathset.path_times, f)),
        flow_time=support.total_time(),
        removed_cycle_time=support.removed_time,
        scale=support.scale,
        threshold=threshold,
        normalized=support.normalized,
    )


def decompose_greedy(support: SupportSubgraph, threshold: float) -> PathAllocation:
    """Plain flow decomposition, used when path enumeration explodes.

    Repeatedly follows the lowest-id positive out-arc from the origin and
    peels off the bottleneck. Valid but not accessibility-optimal.
    """
    rest = dict(support.flow)
    out: dict = {}
    for a in support.arcs:
        out.setdefault(support.tails[a], []).append(a)
    paths, fracs = [], []
    while True:
        v, path, seen = support.origin, [], {support.origin}
        while v != support.destination:
            nxt = next((a for a in out.get(v, ()) if rest[a] > support.tol
                        and support.heads[a] not in seen), None)
            if nxt is None:
                break
            path.append(nxt)
            v = support.heads[nxt]
            seen.add(v)
        if v != support.destination or not path:
            break
        amount = min(rest[a] for a in path)
        for a in path:
            rest[a] -= amount
        paths.append(tuple(path))
        fracs.append(amount)
    times = tuple(math.fsum(support.times[a] for a in p) for p in paths)
    seqs = tuple((support.origin,) + tuple(support.heads[a] for a in p) for p in paths)
    ps = PathSet(support.demand_id, tuple(paths), times, seqs)
    f = np.array(fracs)
    excess = np.maximum(0.0, np.asarray(times) - threshold)
    return PathAllocation(
        demand_id=support.demand_id,
        pathset=ps,
        fractions=f,
        objective=float(excess @ f) if len(f) else 0.0,
        residual=max(rest.values(), default=0.0),
        path_time_mass=float(np.dot(times, f)) if len(f) else 0.0,
        flow_time=support.total_time(),
        removed_cycle_time=support.removed_time,
        scale=support.scale,
        threshold=threshold,
        normalized=support.normalized,
        mode="decomposition",
    )


@dataclass
class AllocationResult:
    total: float
    per_demand: list
    errors: dict  # demand id -> error message

    def by_demand(self) -> dict:
        return {a.demand_id: a for a in self.per_demand}


def _allocate_one(solution, demand_id, threshold, support_tol, cap, normalize, on_explosion):
    support = cancel_cycles(extract_support(solution, demand_id, support_tol, normalize))
    try:
        pathset = enumerate_paths(support, cap=cap)
    except PathExplosion:
        if on_explosion != "decompose":
            raise
        log.warning("demand %s: path explosion, falling back to greedy decomposition", demand_id)
        return decompose_greedy(support, threshold)
    return allocate_paths(pathset, support, threshold)


def _safe_allocate(args):
    solution, demand_id = args[0], args[1]
    try:
        return demand_id, _allocate_one(*args), None
    except IamodError as exc:
        return demand_id, None, f"{type(exc).__name__}: {exc}"


def allocate_all(solution: FlowSolution, threshold: Optional[float] = None,
                   support_tol: float = DEFAULT_SUPPORT_TOL, cap: int = DEFAULT_PATH_CAP,
                   normalize: bool = True, on_explosion: str = "error",
                   workers: int = 1) -> AllocationResult:
    """Allocate every demand (region by region) and sum the path objectives.

    A failing demand is recorded in ``errors`` and skipped. With
    ``workers > 1`` demands are allocated in a process pool; the total is
    always summed in region/demand order.
    """
    sc = solution.scenario
    threshold = sc.time_threshold if threshold is None else threshold
    order = [m for r in sc.regions for m in r.demands]
    jobs = [(solution, m, threshold, support_tol, cap, normalize, on_explosion) for m in order]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_safe_allocate, jobs))
    else:
        results = [_safe_allocate(j) for j in jobs]
    allocations, errors = [], {}
    for m, alloc, err in results:
        if err is not None:
            errors[m] = err
        else:
            allocations.append(alloc)
    total = math.fsum(a.objective for a in allocations)
    return AllocationResult(total, allocations, errors)


def path_unfairness_summary(allocations, scenario) -> float:
    """Population-weighted regional average of per-demand path-level excess."""
    slacks = np.zeros(len(scenario.demands))
    for a in allocations:
        slacks[scenario.demand_position(a.demand_id)] = a.normalized_objective
    return population_weighted(scenario, region_unfairness(scenario, slacks))


# --------------------------------------------------------------- file format

ALLOCATION_FORMAT = "iamod-allocation v1"
PATHS_FORMAT = "iamod-paths v1"


def dumps_allocation(result: AllocationResult, manifest_id: str = "") -> str:
    lines = [f"# {ALLOCATION_FORMAT} manifest={manifest_id}",
             "demand_id,path_index,fraction,path_time_min,excess_min"]
    for a in result.per_demand:
        for p, (f, t, e) in enumerate(zip(a.fractions, a.pathset.path_times, a.excess)):
            lines.append(f"{a.demand_id},{p},{float(f)!r},{float(t)!r},{float(e)!r}")
    return "\n".join(lines) + "\n"


def dumps_paths(result: AllocationResult, manifest_id: str = "") -> str:
    lines = [f"# {PATHS_FORMAT} manifest={manifest_id}", "demand_id,node_sequence"]
    for a in result.per_demand:
        for seq in a.pathset.node_sequences:
            lines.append(f"{a.demand_id},{' '.join(str(n) for n in seq)}")
    return "\n".join(lines) + "\n"
