"""Independent reference computations used by the tests.

Nothing here calls the package's solver or kernels. LPs are solved by brute
force over vertices and shortest paths by a textbook heap Dijkstra. Path
counts use dynamic programming over a topological order.
"""

import heapq
import itertools
import math

import numpy as np

from iamod.lp import EQ, LE


def _inequalities(model):
    """Rows and finite bounds as ``g . x <= h``; equalities separately."""
    n = model.num_vars
    eq_a, eq_b, g, h = [], [], [], []
    for row in model.rows:
        v = np.zeros(n)
        for j, c in row.coeffs.items():
            v[j] = c
        if row.sense == EQ:
            eq_a.append(v)
            eq_b.append(row.rhs)
        elif row.sense == LE:
            g.append(v)
            h.append(row.rhs)
        else:
            g.append(-v)
            h.append(-row.rhs)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        if math.isfinite(model.lower[j]):
            g.append(-e)
            h.append(-model.lower[j])
        if math.isfinite(model.upper[j]):
            g.append(e)
            h.append(model.upper[j])
    return (np.array(eq_a).reshape(-1, n), np.array(eq_b), np.array(g).reshape(-1, n), np.array(h))


def vertex_enumeration(model, tol=1e-9):
    """Minimum of the objective over all basic feasible points.

    Returns ``(objective, x)`` or ``(None, None)`` when no vertex is
    feasible. Only meaningful when the feasible region is bounded.
    """
    n = model.num_vars
    c = model.cost_vector()
    aeq, beq, g, h = _inequalities(model)
    r_eq = np.linalg.matrix_rank(aeq) if len(aeq) else 0
    k = n - r_eq
    best, best_x = None, None
    for subset in itertools.combinations(range(len(g)), k):
        a = np.vstack([aeq, g[list(subset)]]) if k else aeq
        b = np.concatenate([beq, h[list(subset)]]) if k else beq
        if np.linalg.matrix_rank(a) < n:
            continue
        x = np.linalg.lstsq(a, b, rcond=None)[0]
        scale = 1.0 + np.abs(b).max(initial=0.0)
        if len(aeq) and np.abs(aeq @ x - beq).max() > tol * scale:
            continue
        if len(g) and (g @ x - h).max() > tol * scale:
            continue
        val = float(c @ x)
        if best is None or val < best - 1e-12:
            best, best_x = val, x
    return best, best_x


def dijkstra(graph, source, target):
    """Shortest travel time from ``source`` to ``target`` (inf if unreachable)."""
    dist = {source: 0.0}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        if v == target:
            return d
        for a in graph.out_arcs(v):
            arc = graph.arc(a)
            nd = d + arc.travel_time
            if nd < dist.get(arc.head, math.inf):
                dist[arc.head] = nd
                heapq.heappush(heap, (nd, arc.head))
    return math.inf


def count_paths_dag(edges, source, target):
    """Number of source->target paths in a DAG given as (tail, head) pairs."""
    nodes = {source, target} | {u for u, _ in edges} | {v for _, v in edges}
    indeg = {v: 0 for v in nodes}
    out = {v: [] for v in nodes}
    for u, v in edges:
        out[u].append(v)
        indeg[v] += 1
    order, stack = [], [v for v in nodes if indeg[v] == 0]
    while stack:
        u = stack.pop()
        order.append(u)
        for v in out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    assert len(order) == len(nodes), "not a DAG"
    ways = {v: 0 for v in nodes}
    ways[source] = 1
    for u in order:
        for v in out[u]:
            ways[v] += ways[u]
    return ways[target]


def highs_solve_mps(text, tmp_dir):
    """Solve an MPS document with HiGHS; return ``name value`` lines and the objective."""
    import os

    import highspy

    path = os.path.join(str(tmp_dir), "model.mps")
    with open(path, "w") as fh:
        fh.write(text)
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(path)
    h.run()
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    names = h.getLp().col_names_
    values = h.getSolution().col_value
    lines = "".join(f"{n} {float(v)!r}\n" for n, v in zip(names, values))
    return lines, h.getInfo().objective_function_value
