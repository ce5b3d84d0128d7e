"""``.seq`` pulse-program language: parse, lint, lower, format."""
from .ast import Diagnostic, MeasureStmt, PulseStmt, Quantity, RampStmt, SeqProgram, Span, WaitStmt, has_errors, render_all
from .formatter import format_number, format_program, format_statement
from .lint import lint
from .lowering import SeqError, compile_text, from_schedule, lower
from .parser import ParseResult, parse

__all__ = [
    "Diagnostic", "MeasureStmt", "PulseStmt", "Quantity", "RampStmt", "SeqProgram", "Span", "WaitStmt",
    "has_errors", "render_all", "format_number", "format_program", "format_statement", "lint",
    "SeqError", "compile_text", "from_schedule", "lower", "ParseResult", "parse",
]
