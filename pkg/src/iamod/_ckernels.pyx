# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled graph kernels; same contracts as ``iamod._pykernels``."""

import numpy as np
cimport numpy as cnp


def enumerate_paths(indptr_in, csr_arc_in, csr_head_in, long origin, long dest, long cap):
    cdef long[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int_)
    cdef long[::1] csr_arc = np.ascontiguousarray(csr_arc_in, dtype=np.int_)
    cdef long[::1] csr_head = np.ascontiguousarray(csr_head_in, dtype=np.int_)
    cdef long n = indptr.shape[0] - 1
    if origin == dest:
        return [[]], False
    cdef cnp.ndarray on_path_a = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] on_path = on_path_a
    cdef cnp.ndarray node_a = np.empty(n + 1, dtype=np.int_)
    cdef cnp.ndarray ptr_a = np.empty(n + 1, dtype=np.int_)
    cdef cnp.ndarray arcs_a = np.empty(n + 1, dtype=np.int_)
    cdef long[::1] node_stack = node_a
    cdef long[::1] ptr_stack = ptr_a
    cdef long[::1] arc_stack = arcs_a
    cdef long depth = 1, v, k, w, i
    paths = []
    node_stack[0] = origin
    ptr_stack[0] = indptr[origin]
    on_path[origin] = 1
    while depth > 0:
        v = node_stack[depth - 1]
        k = ptr_stack[depth - 1]
        if k >= indptr[v + 1]:
            on_path[v] = 0
            depth -= 1
            continue
        ptr_stack[depth - 1] = k + 1
        w = csr_head[k]
        if on_path[w]:
            continue
        if w == dest:
            # arcs leading to node_stack[i] are stored at arc_stack[i], i >= 1
            p = [arc_stack[i] for i in range(1, depth)]
            p.append(csr_arc[k])
            paths.append(p)
            if len(paths) > cap:
                return paths, True
            continue
        on_path[w] = 1
        node_stack[depth] = w
        ptr_stack[depth] = indptr[w]
        arc_stack[depth] = csr_arc[k]
        depth += 1
    return paths, False


cdef long _find_cycle(long n, long[::1] indptr, long[::1] csr_arc, long[::1] csr_head,
                      double[::1] flow, double tol, unsigned char[::1] color,
                      long[::1] node_stack, long[::1] ptr_stack, long[::1] arc_stack,
                      long[::1] cycle):
    """Write a cycle's arcs into ``cycle``; return its length (0 if acyclic)."""
    cdef long s, depth, v, k, a, w, i, j, length
    for s in range(n):
        color[s] = 0
    for s in range(n):
        if color[s]:
            continue
        color[s] = 1
        depth = 1
        node_stack[0] = s
        ptr_stack[0] = indptr[s]
        while depth > 0:
            v = node_stack[depth - 1]
            k = ptr_stack[depth - 1]
            if k >= indptr[v + 1]:
                color[v] = 2
                depth -= 1
                continue
            ptr_stack[depth - 1] = k + 1
            a = csr_arc[k]
            if not flow[a] > tol:
                continue
            w = csr_head[k]
            if color[w] == 1:
                i = 0
                while node_stack[i] != w:
                    i += 1
                length = 0
                for j in range(i + 1, depth):
                    cycle[length] = arc_stack[j]
                    length += 1
                cycle[length] = a
                return length + 1
            if color[w] == 0:
                color[w] = 1
                node_stack[depth] = w
                ptr_stack[depth] = indptr[w]
                arc_stack[depth] = a
                depth += 1
    return 0


def cancel_cycles(indptr_in, csr_arc_in, csr_head_in, flow_in, double tol):
    cdef long[::1] indptr = np.ascontiguousarray(indptr_in, dtype=np.int_)
    cdef long[::1] csr_arc = np.ascontiguousarray(csr_arc_in, dtype=np.int_)
    cdef long[::1] csr_head = np.ascontiguousarray(csr_head_in, dtype=np.int_)
    cdef long n = indptr.shape[0] - 1
    cdef long m = csr_arc.shape[0]
    flow_arr = np.array(flow_in, dtype=np.float64)
    cdef double[::1] flow = flow_arr
    removed_arr = np.zeros(flow.shape[0], dtype=np.float64)
    cdef double[::1] removed = removed_arr
    cdef unsigned char[::1] color = np.zeros(max(n, 1), dtype=np.uint8)
    cdef long[::1] node_stack = np.empty(n + 1, dtype=np.int_)
    cdef long[::1] ptr_stack = np.empty(n + 1, dtype=np.int_)
    cdef long[::1] arc_stack = np.empty(n + 1, dtype=np.int_)
    cdef long[::1] cycle = np.empty(max(m, 1), dtype=np.int_)
    cdef long length, i, a, n_cycles = 0
    cdef double delta
    while True:
        length = _find_cycle(n, indptr, csr_arc, csr_head, flow, tol, color,
                             node_stack, ptr_stack, arc_stack, cycle)
        if length == 0:
            break
        delta = flow[cycle[0]]
        for i in range(1, length):
            if flow[cycle[i]] < delta:
                delta = flow[cycle[i]]
        for i in range(length):
            a = cycle[i]
            if flow[a] == delta:
                removed[a] += flow[a]
                flow[a] = 0.0
            else:
                flow[a] -= delta
                removed[a] += delta
        n_cycles += 1
    # write back so the in-place contract matches the Python kernel
    for i in range(flow.shape[0]):
        flow_in[i] = flow[i]
    return removed_arr.tolist(), n_cycles
