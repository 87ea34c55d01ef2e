"""Graph kernel backend selection.

Uses the compiled ``_ckernels`` extension when it was built, otherwise the
pure-Python ``_pykernels``. Set ``IAMOD_PURE_PYTHON=1`` to force the fallback.
"""

import os

from iamod import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("IAMOD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from iamod import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

enumerate_paths = _impl.enumerate_paths
cancel_cycles = _impl.cancel_cycles


def csr(n_nodes, tails, heads, order=None):
    """CSR arrays (indptr, csr_arc, csr_head) from per-arc tail/head positions.

    Arcs are listed per tail in the given ``order`` (default: position order).
    """
    order = range(len(tails)) if order is None else order
    buckets = [[] for _ in range(n_nodes)]
    for a in order:
        buckets[tails[a]].append(a)
    indptr = [0]
    csr_arc = []
    for b in buckets:
        csr_arc.extend(b)
        indptr.append(len(csr_arc))
    csr_head = [heads[a] for a in csr_arc]
    return indptr, csr_arc, csr_head
