"""Debug-oriented model dump/load in LP file format.

Covers the subset this package emits: linear objective with optional
constant, <=/=/>= rows, bounds, General and Binary sections. Round-trips
models built by :class:`ModelBuilder`; variable block structure is not
preserved (every variable loads into its own block).
"""

from __future__ import annotations

import math
import re

import numpy as np

from .model import BINARY, CONTINUOUS, INTEGER, IpModel, ModelBuilder


def _fmt(x: float) -> str:
    return repr(float(x))


def _term(coef: float, name: str, first: bool) -> str:
    sign = "-" if coef < 0 else ("" if first else "+")
    mag = abs(coef)
    return f" {sign} {_fmt(mag)} {name}" if not first else f"{sign}{_fmt(mag)} {name}"


def dump_lp(model: IpModel) -> str:
    names = model.var_names()
    lines: list[str] = []
    lines.append("Maximize" if model.sense == "max" else "Minimize")
    terms = []
    first = True
    for i in np.nonzero(model.obj_coefs)[0]:
        terms.append(_term(float(model.obj_coefs[i]), names[i], first))
        first = False
    if model.obj_offset:
        terms.append(_term(model.obj_offset, "__one__", first))
    lines.append(" obj: " + ("".join(terms) if terms else "0 " + (names[0] if names else "")))
    lines.append("Subject To")
    for con in model.constraints():
        body = ""
        first = True
        for idx, cv in zip(con.indices, con.coefs):
            body += _term(float(cv), names[idx], first)
            first = False
        if first:
            body = "0 " + (names[0] if names else "__one__")
        op = {"<=": "<=", ">=": ">=", "=": "="}[con.sense]
        lines.append(f" {con.name}: {body} {op} {_fmt(con.rhs)}")
    lines.append("Bounds")
    if model.obj_offset:
        lines.append(" __one__ = 1")
    for i, nm in enumerate(names):
        lo, hi = model.lb[i], model.ub[i]
        lo_s = "-inf" if math.isinf(lo) else _fmt(lo)
        hi_s = "+inf" if math.isinf(hi) else _fmt(hi)
        lines.append(f" {lo_s} <= {nm} <= {hi_s}")
    generals = [
        b.var_name(i)
        for b in model.blocks
        if b.kind == INTEGER
        for i in range(b.count)
    ]
    binaries = [
        b.var_name(i)
        for b in model.blocks
        if b.kind == BINARY
        for i in range(b.count)
    ]
    if generals:
        lines.append("General")
        lines.append(" " + " ".join(generals))
    if binaries:
        lines.append("Binary")
        lines.append(" " + " ".join(binaries))
    lines.append("End")
    return "\n".join(lines) + "\n"


_TERM_RE = re.compile(r"([+-]?)\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][\w\[\]]*)")


def _parse_terms(expr: str) -> list[tuple[str, float]]:
    out = []
    for sign, coef, name in _TERM_RE.findall(expr):
        c = float(coef) if coef else 1.0
        if sign == "-":
            c = -c
        out.append((name, c))
    return out


def load_lp(text: str) -> IpModel:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("\\")]
    sense = "min"
    i = 0
    if lines[i].lower().startswith("max"):
        sense = "max"
    i += 1

    # objective may span until "Subject To"
    obj_src = []
    while i < len(lines) and lines[i].lower() not in ("subject to", "st", "s.t."):
        obj_src.append(lines[i])
        i += 1
    obj_expr = " ".join(obj_src)
    if ":" in obj_expr:
        obj_expr = obj_expr.split(":", 1)[1]
    obj_terms = _parse_terms(obj_expr)
    i += 1  # skip "Subject To"

    rows: list[tuple[str, list[tuple[str, float]], str, float]] = []
    section = "constraints"
    bounds: dict[str, tuple[float, float]] = {}
    kinds: dict[str, str] = {}
    while i < len(lines):
        low = lines[i].lower()
        if low == "bounds":
            section = "bounds"
            i += 1
            continue
        if low == "general":
            section = "general"
            i += 1
            continue
        if low == "binary":
            section = "binary"
            i += 1
            continue
        if low == "end":
            break
        ln = lines[i]
        if section == "constraints":
            name, body = ln.split(":", 1) if ":" in ln else (f"c{len(rows)}", ln)
            m = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$", body)
            if not m:
                raise ValueError(f"cannot parse constraint line: {ln!r}")
            sense_s, rhs = m.group(1), float(m.group(2))
            rows.append((name.strip(), _parse_terms(body[: m.start()]), sense_s, rhs))
        elif section == "bounds":
            m = re.match(
                r"^\s*(-inf|[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*<=\s*([\w\[\]]+)\s*<=\s*(\+?inf|[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$",
                ln,
            )
            if m:
                lo = -math.inf if m.group(1) == "-inf" else float(m.group(1))
                hi = math.inf if m.group(3) in ("inf", "+inf") else float(m.group(3))
                bounds[m.group(2)] = (lo, hi)
            else:
                m2 = re.match(r"^\s*([\w\[\]]+)\s*=\s*([+-]?\d+(?:\.\d+)?)\s*$", ln)
                if not m2:
                    raise ValueError(f"cannot parse bound line: {ln!r}")
                v = float(m2.group(2))
                bounds[m2.group(1)] = (v, v)
        elif section in ("general", "binary"):
            for nm in ln.split():
                kinds[nm] = INTEGER if section == "general" else BINARY
        i += 1

    # collect variable names in deterministic order of first appearance
    order: list[str] = []
    seen = set()

    def note(nm: str) -> None:
        if nm not in seen:
            seen.add(nm)
            order.append(nm)

    for nm, _ in obj_terms:
        note(nm)
    for _, terms, _, _ in rows:
        for nm, _ in terms:
            note(nm)
    for nm in bounds:
        note(nm)
    for nm in kinds:
        note(nm)

    fixed_one = "__one__" in seen

    b = ModelBuilder(sense=sense)
    index: dict[str, int] = {}
    for nm in order:
        if nm == "__one__":
            continue
        lo, hi = bounds.get(nm, (0.0, math.inf))
        kind = kinds.get(nm, CONTINUOUS)
        index[nm] = b.add_var(nm, lo, hi, kind)

    offset = 0.0
    idxs, cfs = [], []
    for nm, cv in obj_terms:
        if nm == "__one__":
            offset += cv
        else:
            idxs.append(index[nm])
            cfs.append(cv)
    if idxs:
        b.add_objective_terms(idxs, cfs)
    b.set_offset(offset)
    for name, terms, sense_s, rhs in rows:
        ridx, rcf = [], []
        for nm, cv in terms:
            if nm == "__one__":
                rhs -= cv
            else:
                ridx.append(index[nm])
                rcf.append(cv)
        b.add_constr(ridx, rcf, sense_s, rhs, name=name)
    _ = fixed_one
    return b.build()
