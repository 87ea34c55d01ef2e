"""Fixed-format MPS export/import and external solution import.

Name sanitization: characters outside ``[A-Za-z0-9_.]`` become ``_`` and the
result is cut to 8 characters. When two names collide after that, the later
one (in index order) keeps its first ``8 - len(s)`` characters followed by a
suffix ``s = "~" + base36(k)`` with the smallest ``k = 1, 2, ...`` that makes
it unique. Row and column names live in separate namespaces; the objective
row is always ``COST``, so no row may sanitize to that name.

Numbers are written in the 12-character MPS field using the shortest
round-trip representation when it fits and otherwise the widest ``%g`` that
does (exponents written without ``+`` or leading zeros). Values whose
shortest form is longer than 12 characters lose precision: at least 5
significant digits survive for any finite double (10 for values of
moderate magnitude such as 1/3).
"""

from __future__ import annotations

import math
import re

import numpy as np

from iamod.errors import MpsParseError, NameCollisionAfterSanitize, UnknownVariableName
from iamod.lp.model import EQ, GE, LE, LpModel, LpSolution, Row, Status

OBJ_ROW = "COST"
_BAD = re.compile(r"[^A-Za-z0-9_.]")
_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}
_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"


def _base36(k: int) -> str:
    s = ""
    while True:
        k, r = divmod(k, 36)
        s = _B36[r] + s
        if k == 0:
            return s


def sanitize_names(names, reserved=(), strict: bool = False) -> list[str]:
    if len(set(names)) != len(names):
        raise NameCollisionAfterSanitize("duplicate names before sanitization")
    taken = set(reserved)
    out = []
    for name in names:
        base = _BAD.sub("_", name)[:8] or "_"
        cand = base
        k = 0
        while cand in taken:
            if strict:
                raise NameCollisionAfterSanitize(f"{name!r} collides as {cand!r}")
            k += 1
            suffix = "~" + _base36(k)
            if len(suffix) > 8:
                raise NameCollisionAfterSanitize(f"cannot make a unique name for {name!r}")
            cand = base[: 8 - len(suffix)] + suffix
        taken.add(cand)
        out.append(cand)
    return out


def _compact(s: str) -> str:
    # "1.5e+07" -> "1.5e7", "2e-05" -> "2e-5"
    if "e" not in s:
        return s
    mant, exp = s.split("e")
    return f"{mant}e{int(exp)}"


def fmt_number(v: float) -> str:
    v = float(v)
    if v == 0:
        return "0"
    s = _compact(repr(v))
    if s.endswith(".0"):
        s = s[:-2]
    if len(s) <= 12:
        return s
    for p in range(12, 0, -1):
        s = _compact(f"{v:.{p}g}")
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot format {v} in 12 characters")


def _line(code: str, name1: str, name2: str = "", num2: str = "", name3: str = "", num3: str = "") -> str:
    # fields start at columns 2, 5, 15, 25, 40, 50 (1-based)
    s = f" {code:<2} {name1:<8}  {name2:<8}  {num2:>12}"
    if name3:
        s += f"   {name3:<8}  {num3:>12}"
    return s.rstrip()


def export_mps(model: LpModel, strict: bool = False) -> str:
    model.validate()
    cols = sanitize_names(model.var_names, strict=strict)
    rows = sanitize_names(model.row_names, reserved=(OBJ_ROW,), strict=strict)
    name = _BAD.sub("_", model.name)[:8] or "LP"

    entries: list[list[tuple[str, float]]] = [[] for _ in range(model.num_vars)]
    for j in sorted(model.objective):
        if model.objective[j] != 0:
            entries[j].append((OBJ_ROW, model.objective[j]))
    for i, row in enumerate(model.rows):
        for j in sorted(row.coeffs):
            if row.coeffs[j] != 0:
                entries[j].append((rows[i], row.coeffs[j]))

    out = [f"NAME          {name}", "ROWS", f" N  {OBJ_ROW}"]
    out += [f" {_SENSE_CODE[r.sense]}  {rows[i]}" for i, r in enumerate(model.rows)]
    out.append("COLUMNS")
    for j in range(model.num_vars):
        ent = entries[j] or [(OBJ_ROW, 0.0)]
        for k in range(0, len(ent), 2):
            pair = ent[k:k + 2]
            if len(pair) == 2:
                out.append(_line("", cols[j], pair[0][0], fmt_number(pair[0][1]),
                                 pair[1][0], fmt_number(pair[1][1])))
            else:
                out.append(_line("", cols[j], pair[0][0], fmt_number(pair[0][1])))
    out.append("RHS")
    rhs = [(rows[i], r.rhs) for i, r in enumerate(model.rows) if r.rhs != 0]
    for k in range(0, len(rhs), 2):
        pair = rhs[k:k + 2]
        if len(pair) == 2:
            out.append(_line("", "RHS", pair[0][0], fmt_number(pair[0][1]),
                             pair[1][0], fmt_number(pair[1][1])))
        else:
            out.append(_line("", "RHS", pair[0][0], fmt_number(pair[0][1])))
    out.append("BOUNDS")
    for j in range(model.num_vars):
        lo, up = model.lower[j], model.upper[j]
        if lo == up:
            out.append(_line("FX", "BND", cols[j], fmt_number(lo)))
            continue
        if lo == -math.inf and up == math.inf:
            out.append(_line("FR", "BND", cols[j]))
            continue
        if lo == -math.inf:
            out.append(_line("MI", "BND", cols[j]))
        elif lo != 0:
            out.append(_line("LO", "BND", cols[j], fmt_number(lo)))
        if up != math.inf:
            out.append(_line("UP", "BND", cols[j], fmt_number(up)))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def parse_mps(text: str) -> LpModel:
    """Read (fixed or free) MPS text produced by :func:`export_mps` or a solver.

    Fields are split on whitespace, so names must not contain spaces.
    """
    model = LpModel()
    section = None
    obj_name = None
    row_index: dict[str, int] = {}
    col_index: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw[0].isspace():
            head = raw.split()
            section = head[0].upper()
            if section == "NAME":
                model.name = head[1] if len(head) > 1 else "LP"
            elif section == "ENDATA":
                break
            elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "OBJSENSE"):
                raise MpsParseError(f"line {lineno}: unsupported section {section}")
            continue
        f = raw.split()
        try:
            if section == "ROWS":
                code, name = f[0].upper(), f[1]
                if code == "N":
                    if obj_name is None:
                        obj_name = name
                    continue
                row_index[name] = model.add_row({}, _CODE_SENSE[code], 0.0, name)
            elif section == "COLUMNS":
                if "'MARKER'" in f:
                    continue
                col = f[0]
                if col not in col_index:
                    col_index[col] = model.add_var(col)
                j = col_index[col]
                for k in range(1, len(f) - 1, 2):
                    rname, val = f[k], float(f[k + 1])
                    if rname == obj_name:
                        model.objective[j] = model.objective.get(j, 0.0) + val
                    else:
                        model.rows[row_index[rname]].coeffs[j] = val
                if model.objective.get(j) == 0.0:
                    del model.objective[j]
            elif section == "RHS":
                for k in range(1, len(f) - 1, 2):
                    rname, val = f[k], float(f[k + 1])
                    if rname != obj_name:
                        model.rows[row_index[rname]].rhs = val
            elif section == "BOUNDS":
                code, col = f[0].upper(), f[2]
                j = col_index[col]
                val = float(f[3]) if len(f) > 3 else None
                if code == "UP":
                    model.upper[j] = val
                elif code == "LO":
                    model.lower[j] = val
                elif code == "FX":
                    model.lower[j] = model.upper[j] = val
                elif code == "FR":
                    model.lower[j], model.upper[j] = -math.inf, math.inf
                elif code == "MI":
                    model.lower[j] = -math.inf
                elif code == "PL":
                    model.upper[j] = math.inf
                else:
                    raise MpsParseError(f"line {lineno}: unsupported bound type {code}")
            elif section == "OBJSENSE":
                if f[0].upper() not in ("MIN", "MINIMIZE"):
                    raise MpsParseError(f"line {lineno}: only minimization is supported")
            else:
                raise MpsParseError(f"line {lineno}: data outside a section")
        except (IndexError, KeyError, ValueError) as exc:
            raise MpsParseError(f"line {lineno}: cannot parse {raw.strip()!r} ({exc})") from exc
    model.validate()
    return model


def import_solution(model: LpModel, text: str, tol: float = 1e-6) -> LpSolution:
    """Read ``name value`` lines from an external solver.

    Names may be the model's own variable names or their MPS-sanitized
    form. Unmentioned variables sit at their lower bound (0 if unbounded
    below). Infeasibility beyond ``tol`` is flagged, not raised.
    """
    lookup = {name: j for j, name in enumerate(model.var_names)}
    for j, name in enumerate(sanitize_names(model.var_names)):
        lookup.setdefault(name, j)
    x = np.array([lo if math.isfinite(lo) else 0.0 for lo in model.lower], dtype=float)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MpsParseError(f"solution line {lineno}: expected 'name value'")
        if parts[0] not in lookup:
            raise UnknownVariableName(f"solution line {lineno}: unknown variable {parts[0]!r}")
        try:
            x[lookup[parts[0]]] = float(parts[1])
        except ValueError:
            raise MpsParseError(f"solution line {lineno}: bad value {parts[1]!r}") from None
    viol = model.max_violation(x)
    bad = viol > tol
    return LpSolution(
        Status.INFEASIBLE if bad else Status.OPTIMAL,
        x,
        model.evaluate(x),
        0,
        max_violation=viol,
        infeasible_import=bad,
        message=f"InfeasibleImport: max violation {viol:.3g} > {tol:g}" if bad else "",
    )


def dumps_solution(model: LpModel, x) -> str:
    """``name value`` lines using MPS-sanitized names."""
    names = sanitize_names(model.var_names)
    return "".join(f"{n} {float(v)!r}\n" for n, v in zip(names, x))
