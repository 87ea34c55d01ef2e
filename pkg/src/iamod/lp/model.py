"""Solver-agnostic sparse LP container (minimization)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from iamod.errors import ModelInvalid

LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)


@dataclass
class Row:
    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str = ""


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    ITERATION_LIMIT = "IterationLimit"


@dataclass
class LpSolution:
    status: Status
    x: np.ndarray
    objective_value: float
    iterations: int = 0
    max_violation: float = 0.0
    infeasible_import: bool = False
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass
class LpModel:
    """min c.x  s.t.  rows,  lower <= x <= upper.

    Variables are added with :meth:`add_var`; rows reference them by index.
    """

    name: str = "LP"
    objective: dict[int, float] = field(default_factory=dict)
    rows: list[Row] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    var_names: list[str] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.lower)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def row_names(self) -> list[str]:
        return [r.name for r in self.rows]

    def add_var(self, name: Optional[str] = None, lower=0.0, upper=math.inf, obj=0.0) -> int:
        j = len(self.lower)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.var_names.append(name if name is not None else f"x_{j}")
        if obj:
            self.objective[j] = float(obj)
        return j

    def add_row(self, coeffs: dict[int, float], sense: str, rhs: float, name: Optional[str] = None) -> int:
        i = len(self.rows)
        self.rows.append(Row(dict(coeffs), sense, float(rhs), name if name is not None else f"r_{i}"))
        return i

    def validate(self) -> None:
        n = self.num_vars
        if not (len(self.upper) == len(self.var_names) == n):
            raise ModelInvalid("bounds and names must have one entry per variable")
        for j, (lo, up) in enumerate(zip(self.lower, self.upper)):
            if math.isnan(lo) or math.isnan(up) or lo > up:
                raise ModelInvalid(f"variable {j}: bounds [{lo}, {up}] invalid")
            if lo == math.inf or up == -math.inf:
                raise ModelInvalid(f"variable {j}: bounds [{lo}, {up}] invalid")
        for j, c in self.objective.items():
            if not 0 <= j < n:
                raise ModelInvalid(f"objective index {j} out of range")
            if not math.isfinite(c):
                raise ModelInvalid(f"objective coefficient {j} not finite")
        for i, row in enumerate(self.rows):
            if row.sense not in SENSES:
                raise ModelInvalid(f"row {i}: unknown sense {row.sense!r}")
            if not math.isfinite(row.rhs):
                raise ModelInvalid(f"row {i}: rhs not finite")
            for j, v in row.coeffs.items():
                if not 0 <= j < n:
                    raise ModelInvalid(f"row {i}: index {j} out of range")
                if not math.isfinite(v):
                    raise ModelInvalid(f"row {i}: coefficient for {j} not finite")

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, v in self.objective.items():
            c[j] = v
        return c

    def dense_rows(self) -> tuple[np.ndarray, np.ndarray, list[str]]:
        A = np.zeros((self.num_rows, self.num_vars))
        for i, row in enumerate(self.rows):
            for j, v in row.coeffs.items():
                A[i, j] = v
        b = np.array([r.rhs for r in self.rows], dtype=float)
        return A, b, [r.sense for r in self.rows]

    def evaluate(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum(v * x[j] for j, v in self.objective.items()))

    def max_violation(self, x) -> float:
        """Largest absolute violation over rows and bounds."""
        x = np.asarray(x, dtype=float)
        worst = 0.0
        for row in self.rows:
            lhs = sum(v * x[j] for j, v in row.coeffs.items())
            if row.sense == LE:
                viol = lhs - row.rhs
            elif row.sense == GE:
                viol = row.rhs - lhs
            else:
                viol = abs(lhs - row.rhs)
            worst = max(worst, viol)
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        if len(x):
            worst = max(worst, float(np.max(lo - x)), float(np.max(x - up)))
        return worst

    def scaled(self, col_scale, row_scale, obj_scale: float = 1.0) -> "LpModel":
        """Equivalent model in variables ``y = x / col_scale``.

        Row ``i`` is multiplied by ``row_scale[i]`` and the objective by
        ``obj_scale``. Map a solution back with ``x = col_scale * y``.
        """
        cs = np.asarray(col_scale, dtype=float)
        rs = np.asarray(row_scale, dtype=float)
        if np.any(cs <= 0) or np.any(rs <= 0) or not obj_scale > 0:
            raise ModelInvalid("scale factors must be positive")
        out = LpModel(name=self.name, var_names=list(self.var_names))
        out.lower = [lo / s for lo, s in zip(self.lower, cs)]
        out.upper = [up / s for up, s in zip(self.upper, cs)]
        out.objective = {j: v * cs[j] * obj_scale for j, v in self.objective.items()}
        out.rows = [
            Row({j: v * cs[j] * rs[i] for j, v in row.coeffs.items()}, row.sense, row.rhs * rs[i], row.name)
            for i, row in enumerate(self.rows)
        ]
        return out
