"""Line-oriented lexer and parser for ``.seq`` programs.

Grammar (one statement per line, ``#`` starts a comment)::

    program := header stmt*
    header  := "sites" INT
    stmt    := "pulse" ("global" | "addressed") AXIS ANGLE targets? attr*
             | "ramp" ("on" | "off") targets "shift" FREQ ("dur" TIME)?
             | "wait" TIME
             | "measure" "basis" ANGLE targets?
    attr    := "rabi" FREQ | "dur" TIME
    targets := "@[" INT ("," INT)* "]"

Angles take an optional ``deg``/``rad`` suffix (bare numbers are radians);
times (``ns``, ``us``, ``ms``, ``s``) and frequencies (``Hz``, ``kHz``,
``MHz``, ``GHz``) must carry a unit. Errors are collected per line and parsing
resumes on the next line.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Optional

from .ast import (
    Diagnostic,
    MeasureStmt,
    PulseStmt,
    Quantity,
    RampStmt,
    SeqProgram,
    Span,
    WaitStmt,
    has_errors,
)

ANGLE_UNITS = {None: 1.0, "rad": 1.0, "deg": math.pi / 180}
TIME_UNITS = {"ns": 1e-9, "us": 1e-6, "ms": 1e-3, "s": 1.0}
FREQ_UNITS = {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9}
_UNIT_ALIASES = {"µs": "us", "μs": "us"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<num>[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?)(?P<unit>[A-Za-zµμ]+)?
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<open>@\[)
  | (?P<close>\])
  | (?P<comma>,)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # num | word | open | close | comma
    text: str
    span: Span
    number: Optional[str] = None
    unit: Optional[str] = None


class _LineError(Exception):
    def __init__(self, code: str, message: str, span: Span):
        super().__init__(message)
        self.code = code
        self.message = message
        self.span = span


def _split_comment(line: str) -> tuple[str, Optional[str]]:
    i = line.find("#")
    if i < 0:
        return line, None
    return line[:i], line[i + 1 :].strip()


def tokenize_line(code: str, lineno: int) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(code):
        m = _TOKEN_RE.match(code, pos)
        if m is None:
            span = Span(lineno, pos + 1, pos + 2)
            raise _LineError("E001", f"unexpected character {code[pos]!r}", span)
        end = m.end()
        span = Span(lineno, pos + 1, end + 1)
        kind = m.lastgroup if m.lastgroup != "unit" else "num"
        if m.group("num") is not None:
            kind = "num"
            unit = m.group("unit")
            tokens.append(Token("num", m.group(0), span, m.group("num"), _UNIT_ALIASES.get(unit, unit)))
        elif kind != "ws":
            tokens.append(Token(kind, m.group(0), span))
        pos = end
    return tokens


class _Cursor:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Optional[Token]:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def last_span(self) -> Span:
        return self.tokens[min(self.i, len(self.tokens)) - 1].span

    def next(self, what: str) -> Token:
        tok = self.peek()
        if tok is None:
            raise _LineError("E003", f"expected {what} at end of line", self.last_span())
        self.i += 1
        return tok

    def word(self, choices: tuple[str, ...], what: str) -> Token:
        tok = self.next(what)
        if tok.kind != "word" or tok.text not in choices:
            raise _LineError("E003", f"expected {what}, found {tok.text!r}", tok.span)
        return tok

    def at_word(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "word" and tok.text == text

    def done(self) -> bool:
        return self.i >= len(self.tokens)


def _number(tok: Token) -> float:
    value = float(tok.number)
    if not math.isfinite(value):
        raise _LineError("E004", f"value {tok.text!r} is not finite", tok.span)
    return value


def _quantity(cur: _Cursor, units: dict, what: str, unit_required: bool) -> Quantity:
    tok = cur.next(what)
    if tok.kind != "num":
        raise _LineError("E003", f"expected {what}, found {tok.text!r}", tok.span)
    if tok.unit is None and unit_required:
        raise _LineError("E007", f"{what} needs a unit ({', '.join(u for u in units if u)})", tok.span)
    if tok.unit not in units:
        raise _LineError("E006", f"unknown unit {tok.unit!r} for {what}", tok.span)
    return Quantity(_number(tok), tok.unit, tok.span)


def _angle(cur):
    return _quantity(cur, ANGLE_UNITS, "angle", unit_required=False)


def _time(cur):
    q = _quantity(cur, TIME_UNITS, "time", unit_required=True)
    if q.value < 0:
        raise _LineError("E004", "time must be non-negative", q.span)
    return q


def _freq(cur, positive=False):
    q = _quantity(cur, FREQ_UNITS, "frequency", unit_required=True)
    if positive and q.value <= 0:
        raise _LineError("E004", "frequency must be positive", q.span)
    return q


def _integer(tok: Token, what: str) -> int:
    if tok.kind != "num" or tok.unit is not None or not re.fullmatch(r"\+?\d+", tok.number):
        raise _LineError("E003", f"expected {what}, found {tok.text!r}", tok.span)
    return int(tok.number)


def _targets(cur: _Cursor, site_count: Optional[int]) -> tuple[int, ...]:
    opener = cur.next("'@['")
    if opener.kind != "open":
        raise _LineError("E003", f"expected '@[', found {opener.text!r}", opener.span)
    out: list[int] = []
    while True:
        tok = cur.next("site index")
        site = _integer(tok, "site index")
        if site_count is not None and site >= site_count:
            raise _LineError("E004", f"site {site} out of range (sites {site_count})", tok.span)
        if site in out:
            raise _LineError("E004", f"duplicate site {site}", tok.span)
        out.append(site)
        sep = cur.next("',' or ']'")
        if sep.kind == "close":
            return tuple(out)
        if sep.kind != "comma":
            raise _LineError("E003", f"expected ',' or ']', found {sep.text!r}", sep.span)


def _parse_pulse(cur: _Cursor, kw: Token, site_count):
    scope = cur.word(("global", "addressed"), "'global' or 'addressed'").text
    axis_tok = cur.next("axis")
    if axis_tok.kind != "word":
        raise _LineError("E003", f"expected axis, found {axis_tok.text!r}", axis_tok.span)
    if axis_tok.text not in ("x", "y", "z"):
        raise _LineError("E002", f"unknown axis {axis_tok.text!r} (expected x, y or z)", axis_tok.span)
    angle = _angle(cur)
    targets = None
    tok = cur.peek()
    if tok is not None and tok.kind == "open":
        if scope == "global":
            raise _LineError("E003", "global pulse takes no targets", tok.span)
        targets = _targets(cur, site_count)
    if scope == "addressed" and targets is None:
        raise _LineError("E003", "addressed pulse needs targets '@[...]'", kw.span)
    attrs = {}
    while not cur.done():
        name = cur.word(("rabi", "dur"), "'rabi' or 'dur'")
        if name.text in attrs:
            raise _LineError("E003", f"duplicate attribute {name.text!r}", name.span)
        attrs[name.text] = _freq(cur, positive=True) if name.text == "rabi" else _time(cur)
    return dict(scope=scope, axis=axis_tok.text, angle=angle, targets=targets,
                rabi=attrs.get("rabi"), dur=attrs.get("dur")), PulseStmt


def _parse_ramp(cur: _Cursor, kw: Token, site_count):
    state = cur.word(("on", "off"), "'on' or 'off'").text
    targets = _targets(cur, site_count)
    cur.word(("shift",), "'shift'")
    shift = _freq(cur)
    dur = None
    if cur.at_word("dur"):
        cur.next("'dur'")
        dur = _time(cur)
    return dict(state=state, targets=targets, shift=shift, dur=dur), RampStmt


def _parse_wait(cur: _Cursor, kw: Token, site_count):
    return dict(time=_time(cur)), WaitStmt


def _parse_measure(cur: _Cursor, kw: Token, site_count):
    cur.word(("basis",), "'basis'")
    angle = _angle(cur)
    targets = None
    tok = cur.peek()
    if tok is not None and tok.kind == "open":
        targets = _targets(cur, site_count)
    return dict(angle=angle, targets=targets), MeasureStmt


_STATEMENTS = {"pulse": _parse_pulse, "ramp": _parse_ramp, "wait": _parse_wait, "measure": _parse_measure}


@dataclass
class ParseResult:
    program: SeqProgram
    diagnostics: list[Diagnostic]

    @property
    def ok(self) -> bool:
        return not has_errors(self.diagnostics)


def parse(text: str) -> ParseResult:
    diags: list[Diagnostic] = []
    statements = []
    pending: list[str] = []
    header_comments: tuple[str, ...] = ()
    header_trailing = None
    header_span = None
    site_count: Optional[int] = None
    header_seen = False
    missing_reported = False

    def error(code, message, span):
        diags.append(Diagnostic("error", code, message, span.line, span.column))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        code, comment = _split_comment(raw)
        try:
            tokens = tokenize_line(code, lineno)
        except _LineError as e:
            error(e.code, e.message, e.span)
            pending.clear()
            continue
        if not tokens:
            if comment is not None:
                pending.append(comment)
            continue
        kw = tokens[0]
        cur = _Cursor(tokens)
        cur.next("keyword")
        try:
            if kw.kind != "word":
                raise _LineError("E003", f"expected a statement keyword, found {kw.text!r}", kw.span)
            if kw.text == "sites":
                if header_seen:
                    raise _LineError("E005", "duplicate 'sites' header", kw.span)
                if statements:
                    raise _LineError("E005", "'sites' header must come before any statement", kw.span)
                header_seen = True
                tok = cur.next("site count")
                n = _integer(tok, "site count")
                if n < 1:
                    raise _LineError("E004", "site count must be at least 1", tok.span)
                if not cur.done():
                    extra = cur.peek()
                    raise _LineError("E003", f"unexpected {extra.text!r}", extra.span)
                site_count = n
                header_span = kw.span
                header_comments, header_trailing = tuple(pending), comment
                pending.clear()
                continue
            if kw.text not in _STATEMENTS:
                raise _LineError("E003", f"unknown statement {kw.text!r}", kw.span)
            if not header_seen and not missing_reported:
                missing_reported = True
                diags.append(Diagnostic("error", "E005", "missing 'sites' header", kw.span.line, kw.span.column))
            fields, cls = _STATEMENTS[kw.text](cur, kw, site_count)
            if not cur.done():
                extra = cur.peek()
                raise _LineError("E003", f"unexpected {extra.text!r}", extra.span)
            span = Span(lineno, kw.span.column, tokens[-1].span.end_column)
            statements.append(cls(**fields, comments=tuple(pending), trailing=comment, span=span))
            pending.clear()
        except _LineError as e:
            error(e.code, e.message, e.span)
            pending.clear()

    if not header_seen and not missing_reported:
        diags.append(Diagnostic("error", "E005", "missing 'sites' header", 1, 1))
    program = SeqProgram(
        site_count=site_count or 0,
        statements=tuple(statements),
        header_comments=header_comments,
        header_trailing=header_trailing,
        footer_comments=tuple(pending),
        header_span=header_span or Span(1, 1, 2),
    )
    return ParseResult(program, diags)
