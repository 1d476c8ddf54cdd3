"""Restricted indentation-based program language for agent-generated code."""

from .lexer import Token, tokenize
from .parser import parse, parse_source, unparse
from .interp import (
    ExecutionLimits,
    ProgramOutput,
    ProgramSource,
    execute,
    serialize_trace,
)

__all__ = [
    "serialize_trace",
    "Token",
    "tokenize",
    "parse",
    "parse_source",
    "unparse",
    "ExecutionLimits",
    "ProgramOutput",
    "ProgramSource",
    "execute",
]
