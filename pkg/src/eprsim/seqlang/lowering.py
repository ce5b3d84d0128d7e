"""Translation between ``.seq`` programs and :class:`~eprsim.control.Schedule`."""
from __future__ import annotations

import math

from ..control import DEFAULT_RABI, DEFAULT_RAMP_TIME, PulseEvent, Schedule, pulse_duration

from .ast import Diagnostic, MeasureStmt, PulseStmt, Quantity, RampStmt, SeqProgram, WaitStmt, has_errors
from .formatter import format_quantity
from .lint import lint
from .parser import ANGLE_UNITS, FREQ_UNITS, TIME_UNITS, ParseResult, parse


class SeqError(ValueError):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        first = next((d for d in self.diagnostics if d.severity == "error"), None)
        super().__init__(first.render() if first else "program has errors")


def _scale(q: Quantity | None, table: dict, default=None):
    if q is None:
        return default
    return q.value * table[q.unit]


def _angle(q: Quantity) -> float:
    return math.radians(q.value) if q.unit == "deg" else q.value


def lower(program: SeqProgram | ParseResult) -> Schedule:
    """Order-preserving lowering; raises :class:`SeqError` if there are errors."""
    if isinstance(program, ParseResult):
        if not program.ok:
            raise SeqError(program.diagnostics)
        program = program.program
    events = []
    for stmt in program.statements:
        if isinstance(stmt, PulseStmt):
            angle = _angle(stmt.angle)
            rabi = _scale(stmt.rabi, FREQ_UNITS, DEFAULT_RABI)
            dur = _scale(stmt.dur, TIME_UNITS)
            if dur is None:
                dur = pulse_duration(angle, rabi)
            kind = "global_pulse" if stmt.scope == "global" else "addressed_pulse"
            events.append(PulseEvent(kind, stmt.axis, angle, stmt.targets or (), dur, rabi=rabi))
        elif isinstance(stmt, RampStmt):
            events.append(PulseEvent(
                "addressing_ramp", targets=stmt.targets,
                duration=_scale(stmt.dur, TIME_UNITS, DEFAULT_RAMP_TIME),
                shift=_scale(stmt.shift, FREQ_UNITS), ramp=stmt.state,
            ))
        elif isinstance(stmt, WaitStmt):
            events.append(PulseEvent("wait", duration=_scale(stmt.time, TIME_UNITS)))
        elif isinstance(stmt, MeasureStmt):
            events.append(PulseEvent("measure", "y", _angle(stmt.angle), stmt.targets or ()))
    return Schedule(tuple(events), program.site_count)


def compile_text(text: str) -> tuple[Schedule | None, list[Diagnostic]]:
    """Parse, lint and lower. Returns ``(None, diags)`` if any error occurred."""
    result = parse(text)
    diags = list(result.diagnostics)
    if has_errors(diags):
        return None, diags
    diags += lint(result.program)
    return lower(result.program), diags


def _pick_unit(value: float, table: dict) -> Quantity:
    """Shortest spelling among the units that convert back exactly."""
    exact = [Quantity(value / scale, unit) for unit, scale in table.items() if (value / scale) * scale == value]
    if not exact:
        base = min(table, key=table.get)
        return Quantity(value / table[base], base)
    return min(exact, key=lambda q: (len(format_quantity(q)), -table[q.unit]))


def _angle_quantity(rad: float) -> Quantity:
    deg = math.degrees(rad)
    if deg == round(deg, 6) and math.radians(deg) == rad:
        return Quantity(deg, "deg")
    return Quantity(rad, "rad")


def from_schedule(s: Schedule) -> SeqProgram:
    """Program that lowers back to ``s`` exactly."""
    stmts = []
    for ev in s.events:
        if ev.kind in ("global_pulse", "addressed_pulse"):
            rabi = ev.rabi if ev.rabi is not None else DEFAULT_RABI
            angle = _angle_quantity(ev.angle)
            # attributes that lower back to the same value by default are left out
            implied = pulse_duration(_angle(angle), rabi) == ev.duration
            stmts.append(PulseStmt(
                "global" if ev.kind == "global_pulse" else "addressed", ev.axis, angle,
                ev.targets if ev.kind == "addressed_pulse" else None,
                None if rabi == DEFAULT_RABI else _pick_unit(rabi, FREQ_UNITS),
                None if implied else _pick_unit(ev.duration, TIME_UNITS),
            ))
        elif ev.kind == "addressing_ramp":
            dur = None if ev.duration == DEFAULT_RAMP_TIME else _pick_unit(ev.duration, TIME_UNITS)
            stmts.append(RampStmt(ev.ramp, ev.targets, _pick_unit(ev.shift, FREQ_UNITS), dur))
        elif ev.kind == "wait":
            stmts.append(WaitStmt(_pick_unit(ev.duration, TIME_UNITS)))
        else:
            stmts.append(MeasureStmt(_angle_quantity(ev.angle), ev.targets or None))
    return SeqProgram(s.site_count, tuple(stmts))
