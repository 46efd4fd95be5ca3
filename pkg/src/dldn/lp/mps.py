"""Fixed-format MPS export, for cross-checking a master problem with external solvers."""

from __future__ import annotations

import math

from .model import LinearProgram


def _num(v: float) -> str:
    # fixed MPS fields hold 12 characters; drop precision until the value fits
    for digits in range(12, 0, -1):
        s = f"{v:.{digits}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"cannot fit {v} in an MPS field")


def write_mps(lp: LinearProgram, path, name: str = "DLDN") -> None:
    """Write ``lp`` in fixed MPS. MPS minimizes, so the objective is negated."""
    m, n = lp.shape
    rows = [f"R{i}" for i in range(m)]
    cols = [f"C{j}" for j in range(n)]
    out = ["* maximize problem written as minimize of the negated objective",
           f"NAME          {name[:8]}", "ROWS", " N  OBJ"]
    out += [f" L  {r}" for r in rows]
    out.append("COLUMNS")
    for j in range(n):
        entries = [("OBJ", -lp.c[j])] + [(rows[i], lp.A[i, j]) for i in range(m) if lp.A[i, j] != 0]
        for rname, val in entries:
            if val != 0 or rname == "OBJ":
                out.append(f"    {cols[j]:<8}  {rname:<8}  {_num(val):>12}")
    out.append("RHS")
    for i in range(m):
        if lp.b[i] != 0:
            out.append(f"    {'RHS':<8}  {rows[i]:<8}  {_num(lp.b[i]):>12}")
    out.append("BOUNDS")
    for j in range(n):
        if lp.binary[j]:
            out.append(f" BV {'BND':<8}  {cols[j]:<8}")
        elif not math.isinf(lp.upper[j]):
            out.append(f" UP {'BND':<8}  {cols[j]:<8}  {_num(lp.upper[j]):>12}")
    out.append("ENDATA")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")
