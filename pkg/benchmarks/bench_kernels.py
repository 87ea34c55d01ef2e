"""Compare the compiled and pure-Python graph kernels.

Two workloads:

* path enumeration on a ladder of ``k`` rungs (2**k origin-destination paths);
* cycle canceling on a random strongly connected flow with many cycles.

Usage::

    python benchmarks/bench_kernels.py [--rungs 14] [--nodes 400] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from iamod import _pykernels
from iamod.kernels import csr

try:
    from iamod import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def ladder(rungs):
    """Nodes 0..rungs; two parallel arcs between consecutive nodes."""
    tails, heads = [], []
    for i in range(rungs):
        tails += [i, i]
        heads += [i + 1, i + 1]
    return rungs + 1, tails, heads


def cyclic_flow(n_nodes, seed=0):
    """A ring plus random chords, with positive flow on every arc."""
    rng = np.random.default_rng(seed)
    tails = list(range(n_nodes))
    heads = [(i + 1) % n_nodes for i in range(n_nodes)]
    for _ in range(3 * n_nodes):
        u, v = rng.integers(n_nodes, size=2)
        if u != v:
            tails.append(int(u))
            heads.append(int(v))
    flow = rng.uniform(0.1, 1.0, size=len(tails)).tolist()
    return n_nodes, tails, heads, flow


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8} {best * 1e3:10.2f} ms")
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rungs", type=int, default=14)
    ap.add_argument("--nodes", type=int, default=400)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    if _ckernels is None:
        print("compiled kernels not available; timing the pure-Python fallback only")

    n, tails, heads = ladder(args.rungs)
    indptr, csr_arc, csr_head = csr(n, tails, heads)
    cap = 2 ** args.rungs
    print(f"path enumeration, ladder with {args.rungs} rungs ({cap} paths)")
    times = {}
    for name, mod in backends:
        paths, overflow = mod.enumerate_paths(indptr, csr_arc, csr_head, 0, n - 1, cap)
        assert len(paths) == cap and not overflow
        times[name] = bench(name, lambda m=mod: m.enumerate_paths(indptr, csr_arc, csr_head, 0, n - 1, cap),
                            args.repeat)
    if len(times) == 2:
        print(f"  speedup  {times['python'] / times['cython']:10.1f}x")

    n, tails, heads, flow = cyclic_flow(args.nodes)
    indptr, csr_arc, csr_head = csr(n, tails, heads)
    print(f"cycle canceling, {n} nodes, {len(tails)} arcs")
    times = {}
    results = {}
    for name, mod in backends:
        work = list(flow)
        _, n_cycles = mod.cancel_cycles(indptr, csr_arc, csr_head, work, 1e-12)
        results[name] = (n_cycles, work)
        times[name] = bench(name, lambda m=mod: m.cancel_cycles(indptr, csr_arc, csr_head, list(flow), 1e-12),
                            args.repeat)
    if len(times) == 2:
        assert results["python"][0] == results["cython"][0]
        assert np.allclose(results["python"][1], results["cython"][1])
        print(f"  speedup  {times['python'] / times['cython']:10.1f}x")
        print(f"  cycles canceled: {results['python'][0]}")


if __name__ == "__main__":
    main()
