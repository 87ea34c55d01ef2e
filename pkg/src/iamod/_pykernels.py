"""Pure-Python graph kernels (fallback for the compiled ``_ckernels``).

Graphs are passed in CSR form over node positions ``0..n-1``: the out-arcs of
node ``v`` are ``indptr[v]:indptr[v+1]``, in the order the caller wants them
visited, with ``csr_arc[k]`` the arc position and ``csr_head[k]`` its head.
"""


def enumerate_paths(indptr, csr_arc, csr_head, origin, dest, cap):
    """All simple origin->dest paths as lists of arc positions, in DFS order.

    Returns ``(paths, overflow)``; ``overflow`` is True when more than ``cap``
    paths exist, in which case ``paths`` holds the first ``cap + 1``.
    """
    n = len(indptr) - 1
    paths = []
    if origin == dest:
        return [[]], False
    on_path = [False] * n
    on_path[origin] = True
    node_stack = [origin]
    ptr_stack = [indptr[origin]]
    arc_stack = []
    while node_stack:
        v = node_stack[-1]
        k = ptr_stack[-1]
        if k >= indptr[v + 1]:
            node_stack.pop()
            ptr_stack.pop()
            on_path[v] = False
            if arc_stack:
                arc_stack.pop()
            continue
        ptr_stack[-1] = k + 1
        w = csr_head[k]
        if on_path[w]:
            continue
        if w == dest:
            paths.append(arc_stack + [csr_arc[k]])
            if len(paths) > cap:
                return paths, True
            continue
        on_path[w] = True
        node_stack.append(w)
        ptr_stack.append(indptr[w])
        arc_stack.append(csr_arc[k])
    return paths, False


def cancel_cycles(indptr, csr_arc, csr_head, flow, tol):
    """Remove directed cycles from the positive part of ``flow`` in place.

    Repeatedly finds a cycle among arcs with ``flow > tol`` (DFS from the
    lowest node, arcs in CSR order) and subtracts the cycle's minimum flow
    from each of its arcs. Returns ``(removed, n_cycles)`` where ``removed``
    is the per-arc flow taken away.
    """
    n = len(indptr) - 1
    removed = [0.0] * len(flow)
    n_cycles = 0
    while True:
        cycle = _find_cycle(n, indptr, csr_arc, csr_head, flow, tol)
        if cycle is None:
            return removed, n_cycles
        delta = min(flow[a] for a in cycle)
        for a in cycle:
            if flow[a] == delta:
                removed[a] += flow[a]
                flow[a] = 0.0
            else:
                flow[a] -= delta
                removed[a] += delta
        n_cycles += 1


def _find_cycle(n, indptr, csr_arc, csr_head, flow, tol):
    color = [0] * n  # 0 new, 1 on stack, 2 done
    for s in range(n):
        if color[s]:
            continue
        color[s] = 1
        node_stack = [s]
        ptr_stack = [indptr[s]]
        arc_stack = []
        while node_stack:
            v = node_stack[-1]
            k = ptr_stack[-1]
            if k >= indptr[v + 1]:
                color[v] = 2
                node_stack.pop()
                ptr_stack.pop()
                if arc_stack:
                    arc_stack.pop()
                continue
            ptr_stack[-1] = k + 1
            a = csr_arc[k]
            if not flow[a] > tol:
                continue
            w = csr_head[k]
            if color[w] == 1:
                i = node_stack.index(w)
                return arc_stack[i:] + [a]
            if color[w] == 0:
                color[w] = 1
                node_stack.append(w)
                ptr_stack.append(indptr[w])
                arc_stack.append(a)
    return None
