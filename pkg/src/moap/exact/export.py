"""Write an :class:`IlpModel` as CPLEX-LP or MPS text.

Variables are named ``x_<offer id>``, assignment rows ``d_<demand id>`` and
capacity rows ``k<row>_<vehicle or class>``.  Characters outside
``[A-Za-z0-9_.]`` are written as ``uXX_`` with ``XX`` the hex code.
"""

from __future__ import annotations

import re

from .model import IlpModel

_SAFE = re.compile(r"[^A-Za-z0-9_.]")


def safe_name(text: str) -> str:
    return _SAFE.sub(lambda m: f"u{ord(m.group()):02X}_", text)


def _num(x: float) -> str:
    return f"{x:.12g}"


def _row_names(model: IlpModel):
    inst = model.instance
    eq = [f"d_{safe_name(inst.demands[d].id)}" for d in model.eq_demand]
    origin = model.cap_origin or [""] * len(model.cap_rows)
    cap = [f"k{i}_{safe_name(label)}" if label else f"k{i}" for i, label in enumerate(origin)]
    return eq, cap


def _var_names(model: IlpModel):
    inst = model.instance
    return [f"x_{safe_name(inst.offers[o].id)}" for o in model.var_offer]


def _wrap(terms, first_prefix, indent=" ", width=200):
    lines, line = [], first_prefix
    for t in terms:
        if len(line) + len(t) + 1 > width and line.strip():
            lines.append(line)
            line = indent
        line += t + " "
    lines.append(line.rstrip())
    return lines


def to_lp(model: IlpModel) -> str:
    names = _var_names(model)
    eq_names, cap_names = _row_names(model)
    out = [f"\\ moap model, formulation={model.formulation}, classes={model.classes}"]
    if model.offset:
        out.append(f"\\ constant objective offset {_num(model.offset)} from fixed offers")
    out.append("Minimize")
    terms = []
    for v, c in enumerate(model.costs):
        sign = "-" if c < 0 else "+"
        terms.append(f"{sign} {_num(abs(float(c)))} {names[v]}")
    if terms and terms[0].startswith("+ "):
        terms[0] = terms[0][2:]
    out += _wrap(terms or ["0 " + (names[0] if names else "")], " obj: ")
    out.append("Subject To")
    for row, name in zip(model.eq_rows, eq_names):
        terms = [("+ " if i else "") + names[v] for i, v in enumerate(row)]
        lines = _wrap(terms + ["= 1"], f" {name}: ")
        out += lines
    for (row, rhs), name in zip(model.cap_rows, cap_names):
        terms = [("+ " if i else "") + names[v] for i, v in enumerate(row)]
        out += _wrap(terms + [f"<= {rhs}"], f" {name}: ")
    out.append("Binaries")
    out += _wrap(names, " ")
    out.append("End")
    return "\n".join(out) + "\n"


def to_mps(model: IlpModel) -> str:
    """MPS in fixed-format column layout.

    Names longer than eight characters overflow their fields, which free-MPS
    readers accept; fields are always separated by whitespace.
    """
    names = _var_names(model)
    eq_names, cap_names = _row_names(model)
    rows_of_var = [[] for _ in names]
    for row, name in zip(model.eq_rows, eq_names):
        for v in row:
            rows_of_var[v].append(name)
    for (row, _), name in zip(model.cap_rows, cap_names):
        for v in row:
            rows_of_var[v].append(name)

    out = ["NAME          MOAP", "ROWS", " N  obj"]
    out += [f" E  {name}" for name in eq_names]
    out += [f" L  {name}" for name in cap_names]
    out.append("COLUMNS")
    out.append("    MARKER                 'MARKER'                 'INTORG'")
    for v, name in enumerate(names):
        out.append(f"    {name:<8}  {'obj':<8}  {_num(float(model.costs[v])):>12}")
        for r in rows_of_var[v]:
            out.append(f"    {name:<8}  {r:<8}  {'1':>12}")
    out.append("    MARKER                 'MARKER'                 'INTEND'")
    out.append("RHS")
    for name in eq_names:
        out.append(f"    {'RHS':<8}  {name:<8}  {'1':>12}")
    for (_, rhs), name in zip(model.cap_rows, cap_names):
        out.append(f"    {'RHS':<8}  {name:<8}  {str(rhs):>12}")
    out.append("BOUNDS")
    for name in names:
        out.append(f" UP {'BND':<8}  {name:<8}  {'1':>12}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def export_model(model: IlpModel, fmt: str = "LP") -> str:
    fmt = fmt.upper()
    if fmt == "LP":
        return to_lp(model)
    if fmt == "MPS":
        return to_mps(model)
    raise ValueError(f"unknown export format {fmt!r}")
