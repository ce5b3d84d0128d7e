"""Syntax tree and diagnostics for ``.seq`` pulse programs.

Spans are excluded from equality, so two programs compare equal when they
have the same structure regardless of layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class Span:
    line: int
    column: int  # 1-based, first character of the token
    end_column: int  # exclusive

    def __post_init__(self):
        if self.end_column <= self.column:
            raise ValueError("span must cover at least one character")


NOSPAN = Span(0, 1, 2)


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: Optional[str]  # as written (canonical spelling); None = bare number
    span: Span = field(default=NOSPAN, compare=False)


@dataclass(frozen=True)
class PulseStmt:
    scope: str  # "global" | "addressed"
    axis: str
    angle: Quantity
    targets: Optional[tuple[int, ...]] = None
    rabi: Optional[Quantity] = None
    dur: Optional[Quantity] = None
    comments: tuple[str, ...] = ()
    trailing: Optional[str] = None
    span: Span = field(default=NOSPAN, compare=False)


@dataclass(frozen=True)
class RampStmt:
    state: str  # "on" | "off"
    targets: tuple[int, ...]
    shift: Quantity
    dur: Optional[Quantity] = None
    comments: tuple[str, ...] = ()
    trailing: Optional[str] = None
    span: Span = field(default=NOSPAN, compare=False)


@dataclass(frozen=True)
class WaitStmt:
    time: Quantity
    comments: tuple[str, ...] = ()
    trailing: Optional[str] = None
    span: Span = field(default=NOSPAN, compare=False)


@dataclass(frozen=True)
class MeasureStmt:
    angle: Quantity
    targets: Optional[tuple[int, ...]] = None
    comments: tuple[str, ...] = ()
    trailing: Optional[str] = None
    span: Span = field(default=NOSPAN, compare=False)


Statement = Union[PulseStmt, RampStmt, WaitStmt, MeasureStmt]


@dataclass(frozen=True)
class SeqProgram:
    site_count: int
    statements: tuple[Statement, ...] = ()
    header_comments: tuple[str, ...] = ()
    header_trailing: Optional[str] = None
    footer_comments: tuple[str, ...] = ()
    header_span: Span = field(default=NOSPAN, compare=False)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    line: int
    column: int

    def render(self, source: str | None = None) -> str:
        where = f"{source}:" if source else ""
        return f"{where}{self.line}:{self.column}: {self.severity} {self.code}: {self.message}"


def render_all(diags, source: str | None = None) -> str:
    return "".join(d.render(source) + "\n" for d in diags)


def has_errors(diags) -> bool:
    return any(d.severity == "error" for d in diags)
