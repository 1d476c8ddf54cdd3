"""Tokenizer: indentation-aware lexing with located errors.

Indentation becomes INDENT/DEDENT tokens. Newlines inside brackets are
implicit continuations. Comments are stripped from the token stream but
returned alongside it so callers can keep them as metadata.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import IllegalCharacterError, IndentationMixError, SplSyntaxError

KEYWORDS = frozenset({
    "def", "return", "for", "in", "if", "elif", "else",
    "and", "or", "not", "True", "False", "None", "pass",
})

# Recognized so the parser can reject them with a clear message.
FORBIDDEN_KEYWORDS = frozenset({
    "import", "from", "while", "class", "lambda", "global", "nonlocal",
    "try", "except", "finally", "raise", "with", "yield", "del", "assert",
    "async", "await", "break", "continue",
})

_OPERATORS = [
    "**", "//", "==", "!=", "<=", ">=",
    "(", ")", "[", "]", ",", ":", "=", "<", ">", "+", "-", "*", "/", "%", ".",
]

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")

_OPEN = {"(": ")", "[": "]"}


@dataclass(frozen=True)
class Token:
    kind: str  # NAME KEYWORD NUMBER STRING OP NEWLINE INDENT DEDENT EOF
    value: str
    line: int
    col: int


def _lex_string(text, i, line, col):
    quote = text[i]
    j = i + 1
    out = []
    while j < len(text):
        ch = text[j]
        if ch == "\\":
            if j + 1 >= len(text):
                break
            esc = text[j + 1]
            mapped = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}.get(esc)
            if mapped is None:
                raise SplSyntaxError(f"unsupported escape \\{esc}", line, col)
            out.append(mapped)
            j += 2
        elif ch == quote:
            return "".join(out), j + 1
        elif ch == "\n":
            break
        else:
            out.append(ch)
            j += 1
    raise SplSyntaxError("unterminated string literal", line, col)


def tokenize(source):
    """Lex source text; returns (tokens, comments).

    comments is a list of (line, text) pairs, in order.
    """
    if hasattr(source, "text"):
        source = source.text
    tokens = []
    comments = []
    indent_stack = [""]
    bracket_stack = []
    line_had_tokens = False

    lines = source.split("\n")
    for lineno, raw in enumerate(lines, start=1):
        pos = 0
        if not bracket_stack:
            # measure indentation on a fresh logical line
            m = re.match(r"[ \t]*", raw)
            indent = m.group(0)
            rest = raw[len(indent):]
            if rest == "" or rest.startswith("#"):
                if rest.startswith("#"):
                    comments.append((lineno, rest[1:].strip()))
                continue
            if " " in indent and "\t" in indent:
                raise IndentationMixError(
                    "mixed tabs and spaces in indentation", lineno, 1)
            top = indent_stack[-1]
            if indent != top:
                if indent.startswith(top):
                    indent_stack.append(indent)
                    tokens.append(Token("INDENT", indent, lineno, 1))
                else:
                    while indent_stack and indent != indent_stack[-1]:
                        indent_stack.pop()
                        tokens.append(Token("DEDENT", "", lineno, 1))
                    if not indent_stack or indent != indent_stack[-1]:
                        raise IndentationMixError(
                            "dedent does not match any outer level", lineno, 1)
            pos = len(indent)
            line_had_tokens = False

        while pos < len(raw):
            ch = raw[pos]
            col = pos + 1
            if ch in " \t":
                pos += 1
                continue
            if ch == "#":
                comments.append((lineno, raw[pos + 1:].strip()))
                break
            if ch in "'\"":
                value, end = _lex_string(raw, pos, lineno, col)
                tokens.append(Token("STRING", value, lineno, col))
                pos = end
                line_had_tokens = True
                continue
            if ch.isdigit() or (ch == "." and pos + 1 < len(raw)
                                and raw[pos + 1].isdigit()):
                m = _NUMBER_RE.match(raw, pos)
                tokens.append(Token("NUMBER", m.group(0), lineno, col))
                pos = m.end()
                line_had_tokens = True
                continue
            m = _NAME_RE.match(raw, pos)
            if m:
                word = m.group(0)
                if pos + len(word) < len(raw) and raw[pos + len(word)] in "'\"" \
                        and word.lower() in ("f", "r", "b", "rb", "fr", "u"):
                    raise SplSyntaxError(
                        f"{word}-strings are not supported", lineno, col)
                kind = "KEYWORD" if (word in KEYWORDS or word in FORBIDDEN_KEYWORDS) \
                    else "NAME"
                tokens.append(Token(kind, word, lineno, col))
                pos = m.end()
                line_had_tokens = True
                continue
            for op in _OPERATORS:
                if raw.startswith(op, pos):
                    if op in _OPEN:
                        bracket_stack.append((op, lineno, col))
                    elif op in (")", "]"):
                        if not bracket_stack or _OPEN[bracket_stack[-1][0]] != op:
                            raise SplSyntaxError(f"unmatched {op!r}", lineno, col)
                        bracket_stack.pop()
                    tokens.append(Token("OP", op, lineno, col))
                    pos += len(op)
                    line_had_tokens = True
                    break
            else:
                raise IllegalCharacterError(f"illegal character {ch!r}", lineno, col)

        if not bracket_stack and line_had_tokens:
            tokens.append(Token("NEWLINE", "", lineno, len(raw) + 1))
            line_had_tokens = False

    if bracket_stack:
        op, ln, col = bracket_stack[-1]
        raise SplSyntaxError(f"unclosed {op!r}", ln, col)
    last_line = len(lines)
    while len(indent_stack) > 1:
        indent_stack.pop()
        tokens.append(Token("DEDENT", "", last_line, 1))
    tokens.append(Token("EOF", "", last_line, 1))
    return tokens, comments
