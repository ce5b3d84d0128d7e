"""Canonical pretty-printer: ``parse(format_program(p)) == p``."""
from __future__ import annotations

import math

from .ast import MeasureStmt, PulseStmt, Quantity, RampStmt, SeqProgram, WaitStmt


def format_number(v: float) -> str:
    if not math.isfinite(v):
        raise ValueError(f"cannot format non-finite value {v!r}")
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def format_quantity(q: Quantity) -> str:
    return format_number(q.value) + (q.unit or "")


def format_targets(targets) -> str:
    return "@[" + ",".join(str(t) for t in targets) + "]"


def format_statement(stmt) -> str:
    if isinstance(stmt, PulseStmt):
        parts = ["pulse", stmt.scope, stmt.axis, format_quantity(stmt.angle)]
        if stmt.targets is not None:
            parts.append(format_targets(stmt.targets))
        if stmt.rabi is not None:
            parts += ["rabi", format_quantity(stmt.rabi)]
        if stmt.dur is not None:
            parts += ["dur", format_quantity(stmt.dur)]
    elif isinstance(stmt, RampStmt):
        parts = ["ramp", stmt.state, format_targets(stmt.targets), "shift", format_quantity(stmt.shift)]
        if stmt.dur is not None:
            parts += ["dur", format_quantity(stmt.dur)]
    elif isinstance(stmt, WaitStmt):
        parts = ["wait", format_quantity(stmt.time)]
    elif isinstance(stmt, MeasureStmt):
        parts = ["measure", "basis", format_quantity(stmt.angle)]
        if stmt.targets is not None:
            parts.append(format_targets(stmt.targets))
    else:
        raise TypeError(f"not a statement: {stmt!r}")
    return " ".join(parts)


def _comment(text: str) -> str:
    return f"# {text}" if text else "#"


def _line(code: str, trailing) -> str:
    return code if trailing is None else f"{code}  {_comment(trailing)}"


def format_program(p: SeqProgram) -> str:
    lines = [_comment(c) for c in p.header_comments]
    lines.append(_line(f"sites {p.site_count}", p.header_trailing))
    for stmt in p.statements:
        lines += [_comment(c) for c in stmt.comments]
        lines.append(_line(format_statement(stmt), stmt.trailing))
    lines += [_comment(c) for c in p.footer_comments]
    return "\n".join(lines) + "\n"
