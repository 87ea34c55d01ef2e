from iamod.lp.model import EQ, GE, LE, LpModel, LpSolution, Row, Status
from iamod.lp.mps import export_mps, import_solution, parse_mps
from iamod.lp.simplex import solve_simplex

__all__ = [
    "EQ",
    "GE",
    "LE",
    "LpModel",
    "LpSolution",
    "Row",
    "Status",
    "export_mps",
    "import_solution",
    "parse_mps",
    "solve_simplex",
]
