"""Addressed single-qubit gates built as timed pulse schedules.

Two constructions of an addressed ``R_x(theta)`` over an array of sites:

* scheme 1: two addressed ``R_x(theta/2)`` half-rotations separated by a
  global ``R_x(pi)`` echo, preceded by a global ``R_x(-pi)``;
* scheme 2: addressed ``R_z(-+theta/2)`` phase gates sandwiched between global
  ``R_y(+-pi/2)`` rotations with a global ``R_x(pi)`` echo, closed by a
  zero-duration global ``R_z(-pi)`` frame update.

Addressing light is modelled as plateaus of constant shift. A non-target site
inside an open addressing window picks up a Z phase at its static shift; the
echo makes those phases cancel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .noise import NoiseConfig, coherence_factor, dephase
from .qcore import State, Unitary, apply, embed, rotation

DEFAULT_RABI = 1e3  # Hz
DEFAULT_SHIFT = 10e3  # Hz
DEFAULT_RAMP_TIME = 50e-6  # s
# sinc^2(pi f tau) = 1/2  ->  f tau = 0.442946...
SQUARE_PULSE_HWHM = 0.4429464707

KINDS = ("global_pulse", "addressed_pulse", "addressing_ramp", "wait", "measure")


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class PulseEvent:
    kind: str
    axis: str = "x"
    angle: float = 0.0
    targets: tuple[int, ...] = ()
    duration: float = 0.0
    shift: float = 0.0  # Hz, addressing ramps
    rabi: float | None = None  # Hz, pulses
    ramp: str | None = None  # "on" / "off" for addressing ramps

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ScheduleError(f"unknown event kind {self.kind!r}")
        if self.axis not in ("x", "y", "z"):
            raise ScheduleError(f"unknown axis {self.axis!r}")
        if not (self.duration >= 0 and math.isfinite(self.duration)):
            raise ScheduleError("duration must be finite and >= 0")
        if not math.isfinite(self.angle):
            raise ScheduleError("angle must be finite")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind == "addressed_pulse" and not self.targets:
            raise ScheduleError("addressed pulse needs at least one target")
        if self.kind == "addressing_ramp":
            if self.ramp not in ("on", "off"):
                raise ScheduleError("addressing ramp must be 'on' or 'off'")
            if not self.targets:
                raise ScheduleError("addressing ramp needs at least one target")


@dataclass(frozen=True)
class Schedule:
    events: tuple[PulseEvent, ...]
    site_count: int

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.site_count < 1:
            raise ScheduleError("site_count must be >= 1")
        for ev in self.events:
            if any(t < 0 or t >= self.site_count for t in ev.targets):
                raise ScheduleError(f"event targets {ev.targets} outside 0..{self.site_count - 1}")

    @property
    def duration(self) -> float:
        return sum(ev.duration for ev in self.events)

    def addressed_targets(self) -> set[int]:
        return {t for ev in self.events if ev.kind == "addressed_pulse" for t in ev.targets}


@dataclass(frozen=True)
class SiteModel:
    """Per-site response to the addressing light.

    ``static_shift`` (Hz) is the phase rate felt by a site that is *not*
    addressed while an addressing window is open. ``aux_shift`` (Hz) is the
    extra AC Zeeman phase rate on such a site during an addressed z pulse.
    Addressed sites see the pulse in their own resonant frame and pick up no
    static phase.
    """

    static_shift: float = 0.0
    aux_shift: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.static_shift) and math.isfinite(self.aux_shift)):
            raise ScheduleError("site shifts must be finite")


def pulse_duration(angle: float, rabi: float) -> float:
    return abs(angle) / (2 * math.pi * rabi)


def _pulse(kind, axis, angle, targets=(), rabi=DEFAULT_RABI, duration=None) -> PulseEvent:
    if duration is None:
        duration = pulse_duration(angle, rabi)
    return PulseEvent(kind, axis, angle, tuple(targets), duration, rabi=rabi)


def _ramp(state, targets, shift, ramp_time) -> PulseEvent:
    return PulseEvent("addressing_ramp", targets=tuple(targets), duration=ramp_time, shift=shift, ramp=state)


def _check_args(theta: float, targets: Iterable[int], site_count: int) -> tuple[int, ...]:
    targets = tuple(sorted(set(int(t) for t in targets)))
    if not targets:
        raise ScheduleError("target set must be non-empty")
    if not (math.isfinite(theta) and -2 * math.pi <= theta <= 2 * math.pi):
        raise ScheduleError(f"theta must lie in [-2pi, 2pi], got {theta!r}")
    if max(targets) >= site_count or min(targets) < 0:
        raise ScheduleError(f"targets {targets} outside 0..{site_count - 1}")
    return targets


def scheme1_sequence(
    theta: float,
    targets: Iterable[int],
    site_count: int = 2,
    rabi: float = DEFAULT_RABI,
    shift: float = DEFAULT_SHIFT,
    ramp_time: float = DEFAULT_RAMP_TIME,
) -> Schedule:
    """``R_x^ad(theta/2) R_x^gl(pi) R_x^ad(theta/2) R_x^gl(-pi)``, emitted in time order."""
    t = _check_args(theta, targets, site_count)
    half = [
        _ramp("on", t, shift, ramp_time),
        _pulse("addressed_pulse", "x", theta / 2, t, rabi),
        _ramp("off", t, shift, ramp_time),
    ]
    events = [_pulse("global_pulse", "x", -math.pi, rabi=rabi), *half,
              _pulse("global_pulse", "x", math.pi, rabi=rabi), *half]
    return Schedule(tuple(events), site_count)


def scheme2_sequence(
    theta: float,
    targets: Iterable[int],
    site_count: int = 2,
    rabi: float = DEFAULT_RABI,
    shift: float = DEFAULT_SHIFT,
    ramp_time: float = DEFAULT_RAMP_TIME,
    literal: bool = False,
) -> Schedule:
    """``R_y^gl(-pi/2) R_z^ad(theta/2) R_x^gl(pi) R_z^ad(theta/2) R_y^gl(pi/2)``.

    With the echo in between, the two z half-rotations must carry opposite
    signs for their phases to add on the target, and the ``R_y`` frame leaves
    a global ``R_z(pi)`` that a closing virtual ``R_z(-pi)`` removes.
    ``literal=True`` emits the formula as written (same-sign halves, no frame
    update); that variant is kept as a negative control and is *not* an
    ``R_x(theta)`` gate.
    """
    t = _check_args(theta, targets, site_count)
    first, second = (theta / 2, theta / 2) if literal else (-theta / 2, theta / 2)

    def window(angle):
        return [
            _ramp("on", t, shift, ramp_time),
            _pulse("addressed_pulse", "z", angle, t, rabi),
            _ramp("off", t, shift, ramp_time),
        ]

    events = [
        _pulse("global_pulse", "y", math.pi / 2, rabi=rabi),
        *window(first),
        _pulse("global_pulse", "x", math.pi, rabi=rabi),
        *window(second),
        _pulse("global_pulse", "y", -math.pi / 2, rabi=rabi),
    ]
    if not literal:
        events.append(_pulse("global_pulse", "z", -math.pi, duration=0.0))
    return Schedule(tuple(events), site_count)


def _site_steps(s: Schedule, site: int, model: SiteModel):
    """Yield ``(unitary_or_None, duration)`` per event for one site."""
    if not 0 <= site < s.site_count:
        raise ScheduleError(f"site {site} outside 0..{s.site_count - 1}")
    open_windows: list[tuple[tuple[int, ...], float]] = []

    def static_rate():
        # signed phase rate from every open window that does not address this site
        return sum(
            math.copysign(model.static_shift, shift) for tg, shift in open_windows if site not in tg
        )

    for ev in s.events:
        if ev.kind == "addressing_ramp":
            key = tuple(sorted(ev.targets))
            if ev.ramp == "on":
                if any(k == key for k, _ in open_windows):
                    raise ScheduleError(f"addressing ramp on {key} opened twice")
                open_windows.append((key, ev.shift))
                phase = 2 * math.pi * static_rate() * ev.duration / 2
            else:
                match = [i for i, (k, _) in enumerate(open_windows) if k == key]
                if not match:
                    raise ScheduleError(f"addressing ramp off {key} without a matching ramp on")
                phase = 2 * math.pi * static_rate() * ev.duration / 2
                open_windows.pop(match[0])
            yield (rotation("z", phase) if phase else None), ev.duration
        elif ev.kind == "global_pulse":
            yield rotation(ev.axis, ev.angle), ev.duration
        elif ev.kind == "addressed_pulse":
            if site in ev.targets:
                yield rotation(ev.axis, ev.angle), ev.duration
            else:
                rate = static_rate()
                if ev.axis == "z" and open_windows:
                    rate += model.aux_shift
                phase = 2 * math.pi * rate * ev.duration
                yield (rotation("z", phase) if phase else None), ev.duration
        elif ev.kind == "wait":
            phase = 2 * math.pi * static_rate() * ev.duration
            yield (rotation("z", phase) if phase else None), ev.duration
        else:  # measure marks readout and carries no unitary
            yield None, ev.duration
    if open_windows:
        raise ScheduleError(f"addressing ramp on {open_windows[0][0]} never closed")


def composite_unitary(s: Schedule, site: int, model: SiteModel = SiteModel()) -> Unitary:
    u = np.eye(2, dtype=complex)
    for step, _ in _site_steps(s, site, model):
        if step is not None:
            u = step.matrix @ u
    return Unitary(2, u)


def _models(models, n: int) -> list[SiteModel]:
    if models is None:
        return [SiteModel()] * n
    if isinstance(models, SiteModel):
        return [models] * n
    models = list(models)
    if len(models) != n:
        raise ScheduleError(f"expected {n} site models, got {len(models)}")
    return models


def simulate_schedule(
    s: Schedule,
    state: State,
    models: SiteModel | Sequence[SiteModel] | None = None,
    noise: NoiseConfig | None = None,
) -> State:
    """Run a schedule with site ``i`` mapped to qubit ``i``.

    Without noise each site's composite unitary is applied once. With noise,
    every event is followed by dephasing of all qubits over the event's
    duration at rate ``1/t2_prime``.
    """
    n = state.n_qubits
    if s.site_count != n:
        raise ScheduleError(f"schedule has {s.site_count} sites but the state has {n} qubits")
    models = _models(models, n)
    if noise is None:
        out = state
        for q in range(n):
            out = apply(embed(composite_unitary(s, q, models[q]), [q], n), out)
        return out

    per_site = [list(_site_steps(s, q, models[q])) for q in range(n)]
    out = state.density()
    for k in range(len(s.events)):
        for q in range(n):
            step, _ = per_site[q][k]
            if step is not None:
                out = apply(embed(step, [q], n), out)
        duration = s.events[k].duration
        if duration > 0:
            factor = coherence_factor(duration, noise.t2_prime)
            for q in range(n):
                out = dephase(out, q, factor)
    return out


@dataclass
class CrosstalkReport:
    first_order_residual: float  # rad, static phase left on non-target sites
    leakage_per_pulse: float
    pulse_hwhm: list[float] = field(default_factory=list)  # Hz, per addressed pulse
    shift_to_hwhm: list[float] = field(default_factory=list)
    total_leakage: float = 0.0

    def to_dict(self) -> dict:
        return {
            "first_order_residual": self.first_order_residual,
            "leakage_per_pulse": self.leakage_per_pulse,
            "total_leakage": self.total_leakage,
            "pulse_hwhm": list(self.pulse_hwhm),
            "shift_to_hwhm": list(self.shift_to_hwhm),
        }


def echo_residual(s: Schedule, shift: float) -> float:
    """Net static phase (rad) on a non-target site after echo sign flips.

    Each global pi rotation about an equatorial axis inverts the sign with
    which later Z phases add up.
    """
    sign = 1.0
    total = 0.0
    open_count = 0
    for ev in s.events:
        if ev.kind == "global_pulse" and ev.axis in ("x", "y") and _is_pi(ev.angle):
            sign = -sign
        elif ev.kind == "addressing_ramp":
            total += sign * shift * ev.duration / 2
            open_count += 1 if ev.ramp == "on" else -1
        elif open_count > 0 and ev.kind in ("addressed_pulse", "wait"):
            total += sign * shift * ev.duration
    return abs(2 * math.pi * total)


def _is_pi(angle: float) -> bool:
    r = math.remainder(abs(angle), 2 * math.pi)
    return abs(abs(r) - math.pi) < 1e-9


def crosstalk_report(s: Schedule, rabi: float, shift: float) -> CrosstalkReport:
    """First-order echo residual, (rabi / 2 shift)^2 leakage and pulse linewidths."""
    if not shift > 0:
        raise ScheduleError("addressing shift must be positive")
    addressed = [ev for ev in s.events if ev.kind == "addressed_pulse"]
    leak = (rabi / (2 * shift)) ** 2
    hwhm = [SQUARE_PULSE_HWHM / ev.duration if ev.duration > 0 else math.inf for ev in addressed]
    return CrosstalkReport(
        first_order_residual=echo_residual(s, shift),
        leakage_per_pulse=leak,
        pulse_hwhm=hwhm,
        shift_to_hwhm=[shift / h for h in hwhm],
        total_leakage=leak * len(addressed),
    )


def with_shifts_negated(s: Schedule) -> Schedule:
    events = tuple(replace(ev, shift=-ev.shift) if ev.kind == "addressing_ramp" else ev for ev in s.events)
    return Schedule(events, s.site_count)
