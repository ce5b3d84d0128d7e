"""Echo-discipline lint rules for parsed programs.

W001  addressed pulse on a site with no open addressing ramp
W002  unpaired echo: the global pi x-pulses between the first and last
      addressed pulse do not split the addressed pulses into balanced halves
W003  ramp switched on and never switched off
W004  ramp switched off without a matching ramp on

Lint never fails; it only returns warnings.
"""
from __future__ import annotations

import math

from .ast import Diagnostic, PulseStmt, RampStmt, SeqProgram
from .parser import ANGLE_UNITS


def _warn(code, message, stmt) -> Diagnostic:
    return Diagnostic("warning", code, message, stmt.span.line, stmt.span.column)


def _is_global_pi_x(stmt) -> bool:
    if not (isinstance(stmt, PulseStmt) and stmt.scope == "global" and stmt.axis == "x"):
        return False
    rad = stmt.angle.value * ANGLE_UNITS[stmt.angle.unit]
    r = math.remainder(abs(rad), 2 * math.pi)
    return abs(abs(r) - math.pi) < 1e-9


def lint(p: SeqProgram) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    open_ramps: list[RampStmt] = []
    for stmt in p.statements:
        if isinstance(stmt, RampStmt):
            key = frozenset(stmt.targets)
            if stmt.state == "on":
                open_ramps.append(stmt)
                continue
            match = next((r for r in open_ramps if frozenset(r.targets) == key), None)
            if match is None:
                diags.append(_warn("W004", f"ramp off on {list(stmt.targets)} without a matching ramp on", stmt))
            else:
                open_ramps.remove(match)
        elif isinstance(stmt, PulseStmt) and stmt.scope == "addressed":
            covered = {t for r in open_ramps for t in r.targets}
            missing = [t for t in stmt.targets if t not in covered]
            if missing:
                diags.append(_warn("W001", f"addressed pulse outside ramp window on site(s) {missing}", stmt))

    addressed = [i for i, s in enumerate(p.statements) if isinstance(s, PulseStmt) and s.scope == "addressed"]
    if len(addressed) >= 2:
        lo, hi = addressed[0], addressed[-1]
        echoes = [i for i in range(lo, hi) if _is_global_pi_x(p.statements[i])]
        if echoes:
            # parity of the number of echo pulses preceding each addressed pulse
            even = sum(1 for a in addressed if sum(e < a for e in echoes) % 2 == 0)
            odd = len(addressed) - even
            if even != odd:
                stmt = p.statements[echoes[0]]
                diags.append(_warn(
                    "W002",
                    f"unpaired echo: {even} addressed pulse(s) in the unflipped frame, {odd} in the flipped frame",
                    stmt,
                ))

    for r in open_ramps:
        diags.append(_warn("W003", f"ramp on {list(r.targets)} is never switched off", r))
    diags.sort(key=lambda d: (d.line, d.column, d.code))
    return diags
