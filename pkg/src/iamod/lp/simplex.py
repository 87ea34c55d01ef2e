"""Two-phase revised simplex with a dense explicit basis inverse.

Meant for small models (a few thousand columns). Pricing is Dantzig
(most negative reduced cost); after ``bland_after`` consecutive degenerate
pivots it switches to Bland's rule until the next non-degenerate pivot, which
rules out cycling. Every tie is broken toward the lowest index, so results are
deterministic for identical input.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from iamod.lp.model import EQ, GE, LE, LpModel, LpSolution, Status

log = logging.getLogger(__name__)

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 64


class _StandardForm:
    """min c.z s.t. A z = b, z >= 0, b >= 0, with a map back to model space.

    x = offset + T @ z[:n_struct]
    """

    def __init__(self, model: LpModel):
        n = model.num_vars
        lower = np.asarray(model.lower, dtype=float)
        upper = np.asarray(model.upper, dtype=float)
        c_model = model.cost_vector()
        A_model, b_model, senses = model.dense_rows()

        # columns of T: one per structural standard variable
        cols = []  # (model var, sign)
        offset = np.zeros(n)
        extra_ub = []  # (struct col, bound)
        for j in range(n):
            lo, up = lower[j], upper[j]
            if math.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if math.isfinite(up):
                    extra_ub.append((len(cols) - 1, up - lo))
            elif math.isfinite(up):
                offset[j] = up
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ns = len(cols)
        T = np.zeros((n, ns))
        for k, (j, sgn) in enumerate(cols):
            T[j, k] = sgn

        A_rows = A_model @ T if n else np.zeros((len(senses), 0))
        b_rows = b_model - (A_model @ offset if n else 0.0)
        senses = list(senses)
        for k, bound in extra_ub:
            r = np.zeros(ns)
            r[k] = 1.0
            A_rows = np.vstack([A_rows, r]) if A_rows.size else r[None, :]
            b_rows = np.append(b_rows, bound)
            senses.append(LE)
        m = len(senses)
        A_rows = A_rows.reshape(m, ns)

        n_slack = sum(1 for s in senses if s != EQ)
        A = np.zeros((m, ns + n_slack))
        A[:, :ns] = A_rows
        b = np.array(b_rows, dtype=float).reshape(m)
        slack_of_row = [-1] * m
        k = ns
        for i, s in enumerate(senses):
            if s == LE:
                A[i, k] = 1.0
            elif s == GE:
                A[i, k] = -1.0
            else:
                continue
            slack_of_row[i] = k
            k += 1
        for i in range(m):
            if b[i] < 0:
                A[i] *= -1.0
                b[i] = -b[i]

        self.m = m
        self.n_struct = ns
        self.n_real = ns + n_slack
        self.A = A
        self.b = b
        self.c = np.concatenate([c_model @ T if n else np.zeros(0), np.zeros(n_slack)])
        self.T = T
        self.offset = offset
        self.slack_of_row = slack_of_row

    def to_model(self, z: np.ndarray) -> np.ndarray:
        return self.offset + self.T @ z[: self.n_struct]


class _Simplex:
    def __init__(self, sf: _StandardForm, tol: float, max_iters: int, bland_after: int):
        self.sf = sf
        self.tol = tol
        self.max_iters = max_iters
        self.bland_after = bland_after
        self.iterations = 0
        m = sf.m
        # initial basis: a +1 slack where available, else an artificial
        basis = []
        art_rows = []
        for i in range(m):
            k = sf.slack_of_row[i]
            if k >= 0 and sf.A[i, k] == 1.0:
                basis.append(k)
            else:
                basis.append(-1)
                art_rows.append(i)
        n_art = len(art_rows)
        self.n_real = sf.n_real
        self.A = np.zeros((m, sf.n_real + n_art))
        self.A[:, : sf.n_real] = sf.A
        for t, i in enumerate(art_rows):
            self.A[i, sf.n_real + t] = 1.0
            basis[i] = sf.n_real + t
        self.n_total = sf.n_real + n_art
        self.basis = np.array(basis, dtype=np.int64)
        self.is_basic = np.zeros(self.n_total, dtype=bool)
        self.is_basic[self.basis] = True
        self.allowed = np.ones(self.n_total, dtype=bool)
        self.fix_artificials = False
        self.refactor()

    def refactor(self):
        B = self.A[:, self.basis]
        self.Binv = np.linalg.inv(B) if self.sf.m else np.zeros((0, 0))
        self.xB = self.Binv @ self.sf.b
        self.since_refactor = 0

    def is_artificial(self, k):
        return k >= self.n_real

    def run(self, c: np.ndarray) -> Status:
        """Iterate to optimality for cost vector ``c`` (length n_total)."""
        degenerate_run = 0
        tol = self.tol
        while True:
            if self.iterations >= self.max_iters:
                return Status.ITERATION_LIMIT
            y = self.Binv.T @ c[self.basis]
            d = c - self.A.T @ y
            cand = (~self.is_basic) & self.allowed & (d < -tol)
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return Status.OPTIMAL
            if degenerate_run >= self.bland_after:
                q = int(idx[0])
            else:
                dv = d[idx]
                best = dv.min()
                q = int(idx[np.flatnonzero(dv <= best + 1e-12 * max(1.0, abs(best)))[0]])
            u = self.Binv @ self.A[:, q]
            r = self._ratio_test(u)
            if r < 0:
                return Status.UNBOUNDED
            if self.fix_artificials and self.is_artificial(self.basis[r]):
                theta = 0.0
            else:
                theta = max(self.xB[r] / u[r], 0.0)
            self._pivot(r, q, u, theta)
            degenerate_run = degenerate_run + 1 if theta <= tol else 0

    def _ratio_test(self, u: np.ndarray) -> int:
        """Leaving row, or -1 if the direction is unbounded."""
        basis = self.basis
        # basic artificials are fixed at zero: any movement blocks immediately
        if self.fix_artificials:
            blocked = (basis >= self.n_real) & (np.abs(u) > PIVOT_TOL)
            if blocked.any():
                rows = np.flatnonzero(blocked)
                return int(rows[np.argmin(basis[rows])])
        pos = np.flatnonzero(u > PIVOT_TOL)
        if pos.size == 0:
            return -1
        ratios = np.maximum(self.xB[pos], 0.0) / u[pos]
        best = ratios.min()
        ties = pos[ratios <= best + 1e-12 * max(1.0, best)]
        return int(ties[np.argmin(basis[ties])])

    def _pivot(self, r: int, q: int, u: np.ndarray, theta: float):
        self.xB -= theta * u
        self.xB[r] = theta
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.is_basic[q] = True
        self.basis[r] = q
        piv = u[r]
        row_r = self.Binv[r] / piv
        self.Binv -= np.outer(u, row_r)
        self.Binv[r] = row_r
        self.iterations += 1
        self.since_refactor += 1
        if self.since_refactor >= REFACTOR_EVERY:
            self.refactor()

    def drive_out_artificials(self):
        """Pivot zero-valued artificials out of the basis where possible."""
        for r in range(self.sf.m):
            k = self.basis[r]
            if not self.is_artificial(k):
                continue
            w = self.Binv[r] @ self.A[:, : self.n_real]
            w[self.is_basic[: self.n_real]] = 0.0
            cand = np.flatnonzero(np.abs(w) > 1e-7)
            if cand.size == 0:
                continue  # redundant row; the artificial stays basic at zero
            q = int(cand[0])
            u = self.Binv @ self.A[:, q]
            self._pivot(r, q, u, 0.0)
        self.refactor()


def solve_simplex(model: LpModel, tol: float = FEAS_TOL, max_iters: int = 100_000,
                  bland_after: int = 5) -> LpSolution:
    """Solve ``model`` to optimality.

    Raises :class:`~iamod.errors.ModelInvalid` for malformed models; all other
    outcomes are reported through ``LpSolution.status``.
    """
    model.validate()
    sf = _StandardForm(model)
    n = model.num_vars
    if sf.m == 0:
        return _solve_unconstrained(model, sf)
    spx = _Simplex(sf, tol, max_iters, bland_after)

    n_art = spx.n_total - spx.n_real
    if n_art:
        c1 = np.zeros(spx.n_total)
        c1[spx.n_real:] = 1.0
        status = spx.run(c1)
        if status is Status.ITERATION_LIMIT:
            return LpSolution(status, np.full(n, np.nan), math.nan, spx.iterations)
        spx.refactor()
        infeas = float(np.sum(spx.xB[spx.basis >= spx.n_real]))
        if infeas > tol * max(1.0, float(np.max(sf.b))):
            log.debug("phase 1 ended with infeasibility %g", infeas)
            return LpSolution(Status.INFEASIBLE, np.full(n, np.nan), math.nan, spx.iterations,
                              max_violation=infeas)
        spx.drive_out_artificials()
        spx.allowed[spx.n_real:] = False
        spx.fix_artificials = True

    c2 = np.zeros(spx.n_total)
    c2[: spx.n_real] = sf.c
    status = spx.run(c2)
    if status is not Status.OPTIMAL:
        return LpSolution(status, np.full(n, np.nan), math.nan if status is Status.ITERATION_LIMIT
                          else -math.inf, spx.iterations)

    B = spx.A[:, spx.basis]
    xB = np.linalg.solve(B, sf.b)
    # basic values that are zero up to round-off are snapped onto their bound
    xB[np.abs(xB) <= tol * max(1.0, float(np.max(np.abs(sf.b))))] = 0.0
    z = np.zeros(spx.n_total)
    z[spx.basis] = xB
    x = sf.to_model(z)
    return LpSolution(Status.OPTIMAL, x, model.evaluate(x), spx.iterations,
                      max_violation=float(model.max_violation(x)))


def _solve_unconstrained(model: LpModel, sf: _StandardForm) -> LpSolution:
    z = np.zeros(sf.n_real)
    if np.any(sf.c < -0.0):
        return LpSolution(Status.UNBOUNDED, np.full(model.num_vars, np.nan), -math.inf, 0)
    x = sf.to_model(z)
    return LpSolution(Status.OPTIMAL, x, model.evaluate(x), 0, max_violation=0.0)
