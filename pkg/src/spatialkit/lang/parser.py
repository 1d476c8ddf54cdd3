"""Recursive-descent parser and AST for the restricted program language.

The grammar whitelist: a single `def program(<param>):` entry function whose
body uses assignments, expression statements, `for` over range/list values,
`if/elif/else`, `return`, and `pass`. Anything else is a forbidden-construct
error with a location.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import EntryFunctionError, ForbiddenConstructError, SplSyntaxError
from .lexer import FORBIDDEN_KEYWORDS, tokenize


@dataclass(frozen=True)
class Node:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)


# statements
@dataclass(frozen=True)
class Module(Node):
    func: "FuncDef"
    comments: tuple = ()


@dataclass(frozen=True)
class FuncDef(Node):
    name: str
    param: str
    body: tuple


@dataclass(frozen=True)
class Assign(Node):
    target: str
    value: Node


@dataclass(frozen=True)
class ExprStmt(Node):
    value: Node


@dataclass(frozen=True)
class Return(Node):
    value: Node | None


@dataclass(frozen=True)
class Pass(Node):
    pass


@dataclass(frozen=True)
class For(Node):
    var: str
    iterable: Node
    body: tuple


@dataclass(frozen=True)
class If(Node):
    branches: tuple  # of (condition, body) pairs
    orelse: tuple


# expressions
@dataclass(frozen=True)
class Name(Node):
    id: str


@dataclass(frozen=True)
class Num(Node):
    value: object  # int or float


@dataclass(frozen=True)
class Str(Node):
    value: str


@dataclass(frozen=True)
class Const(Node):
    value: object  # True / False / None


@dataclass(frozen=True)
class ListLit(Node):
    items: tuple


@dataclass(frozen=True)
class Attr(Node):
    obj: Node
    name: str


@dataclass(frozen=True)
class Index(Node):
    obj: Node
    index: Node


@dataclass(frozen=True)
class Call(Node):
    func: Node
    args: tuple
    kwargs: tuple  # of (name, expr) pairs


@dataclass(frozen=True)
class UnaryOp(Node):
    op: str  # - + not
    operand: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class BoolOp(Node):
    op: str  # and / or
    left: Node
    right: Node


@dataclass(frozen=True)
class Compare(Node):
    op: str
    left: Node
    right: Node


_COMPARE_OPS = ("==", "!=", "<", "<=", ">", ">=")


class _Parser:
    def __init__(self, tokens, comments=()):
        self.tokens = tokens
        self.comments = tuple(comments)
        self.pos = 0

    # token helpers ---------------------------------------------------------
    def peek(self, offset=0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def check(self, kind, value=None):
        tok = self.peek()
        return tok.kind == kind and (value is None or tok.value == value)

    def accept(self, kind, value=None):
        if self.check(kind, value):
            return self.next()
        return None

    def expect(self, kind, value=None):
        tok = self.peek()
        if not self.check(kind, value):
            expected = value if value is not None else kind
            raise SplSyntaxError(
                f"expected {expected!r}, found {tok.value or tok.kind!r}",
                tok.line, tok.col)
        return self.next()

    def _forbidden_check(self):
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value in FORBIDDEN_KEYWORDS:
            raise ForbiddenConstructError(
                f"{tok.value!r} is not allowed in programs", tok.line, tok.col)

    # grammar ---------------------------------------------------------------
    def parse_module(self):
        funcs = []
        while not self.check("EOF"):
            self._forbidden_check()
            if self.check("KEYWORD", "def"):
                funcs.append(self.parse_funcdef())
            else:
                tok = self.peek()
                raise EntryFunctionError(
                    "only a single top-level `def program(...)` is allowed",
                    tok.line, tok.col)
        if len(funcs) != 1:
            raise EntryFunctionError(
                f"expected exactly one top-level function, found {len(funcs)}",
                line=funcs[1].line if len(funcs) > 1 else 1, col=1)
        func = funcs[0]
        if func.name != "program":
            raise EntryFunctionError(
                f"entry function must be named 'program', found {func.name!r}",
                func.line, func.col)
        return Module(func=func, comments=self.comments,
                      line=func.line, col=func.col)

    def parse_funcdef(self):
        tok = self.expect("KEYWORD", "def")
        name = self.expect("NAME").value
        self.expect("OP", "(")
        params = []
        if not self.check("OP", ")"):
            while True:
                params.append(self.expect("NAME").value)
                if self.accept("OP", ":"):  # optional annotation, ignored
                    self.expect("NAME")
                if not self.accept("OP", ","):
                    break
        self.expect("OP", ")")
        self.expect("OP", ":")
        if len(params) != 1:
            raise EntryFunctionError(
                f"entry function must take exactly one parameter, found "
                f"{len(params)}", tok.line, tok.col)
        body = self.parse_block()
        return FuncDef(name=name, param=params[0], body=body,
                       line=tok.line, col=tok.col)

    def parse_block(self):
        self.expect("NEWLINE")
        self.expect("INDENT")
        stmts = []
        while not self.check("DEDENT") and not self.check("EOF"):
            stmts.append(self.parse_statement())
        self.expect("DEDENT")
        if not stmts:
            tok = self.peek()
            raise SplSyntaxError("empty block", tok.line, tok.col)
        return tuple(stmts)

    def parse_statement(self):
        self._forbidden_check()
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "return":
                self.next()
                value = None
                if not self.check("NEWLINE"):
                    value = self.parse_expr()
                self.expect("NEWLINE")
                return Return(value=value, line=tok.line, col=tok.col)
            if tok.value == "pass":
                self.next()
                self.expect("NEWLINE")
                return Pass(line=tok.line, col=tok.col)
            if tok.value == "for":
                return self.parse_for()
            if tok.value == "if":
                return self.parse_if()
            if tok.value == "def":
                raise ForbiddenConstructError(
                    "nested function definitions are not allowed",
                    tok.line, tok.col)
            if tok.value in ("elif", "else"):
                raise SplSyntaxError(
                    f"{tok.value!r} without matching 'if'", tok.line, tok.col)
        # assignment or expression statement
        if tok.kind == "NAME" and self.peek(1).kind == "OP" \
                and self.peek(1).value == "=":
            self.next()
            self.next()
            value = self.parse_expr()
            self.expect("NEWLINE")
            return Assign(target=tok.value, value=value,
                          line=tok.line, col=tok.col)
        value = self.parse_expr()
        self.expect("NEWLINE")
        return ExprStmt(value=value, line=tok.line, col=tok.col)

    def parse_for(self):
        tok = self.expect("KEYWORD", "for")
        var = self.expect("NAME").value
        self.expect("KEYWORD", "in")
        iterable = self.parse_expr()
        self.expect("OP", ":")
        body = self.parse_block()
        return For(var=var, iterable=iterable, body=body,
                   line=tok.line, col=tok.col)

    def parse_if(self):
        tok = self.expect("KEYWORD", "if")
        branches = [(self.parse_expr(), self._colon_block())]
        orelse = ()
        while self.check("KEYWORD", "elif"):
            self.next()
            branches.append((self.parse_expr(), self._colon_block()))
        if self.accept("KEYWORD", "else"):
            orelse = self._colon_block()
        return If(branches=tuple(branches), orelse=orelse,
                  line=tok.line, col=tok.col)

    def _colon_block(self):
        self.expect("OP", ":")
        return self.parse_block()

    # expressions, precedence climbing ---------------------------------------
    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        node = self.parse_and()
        while self.check("KEYWORD", "or"):
            tok = self.next()
            node = BoolOp(op="or", left=node, right=self.parse_and(),
                          line=tok.line, col=tok.col)
        return node

    def parse_and(self):
        node = self.parse_not()
        while self.check("KEYWORD", "and"):
            tok = self.next()
            node = BoolOp(op="and", left=node, right=self.parse_not(),
                          line=tok.line, col=tok.col)
        return node

    def parse_not(self):
        if self.check("KEYWORD", "not"):
            tok = self.next()
            return UnaryOp(op="not", operand=self.parse_not(),
                           line=tok.line, col=tok.col)
        return self.parse_comparison()

    def parse_comparison(self):
        node = self.parse_arith()
        if self.peek().kind == "OP" and self.peek().value in _COMPARE_OPS:
            tok = self.next()
            node = Compare(op=tok.value, left=node, right=self.parse_arith(),
                           line=tok.line, col=tok.col)
        return node

    def parse_arith(self):
        node = self.parse_term()
        while self.peek().kind == "OP" and self.peek().value in ("+", "-"):
            tok = self.next()
            node = BinOp(op=tok.value, left=node, right=self.parse_term(),
                         line=tok.line, col=tok.col)
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.peek().kind == "OP" and self.peek().value in ("*", "/", "//", "%"):
            tok = self.next()
            node = BinOp(op=tok.value, left=node, right=self.parse_factor(),
                         line=tok.line, col=tok.col)
        return node

    def parse_factor(self):
        if self.peek().kind == "OP" and self.peek().value in ("-", "+"):
            tok = self.next()
            return UnaryOp(op=tok.value, operand=self.parse_factor(),
                           line=tok.line, col=tok.col)
        return self.parse_power()

    def parse_power(self):
        node = self.parse_postfix()
        if self.check("OP", "**"):
            tok = self.next()
            node = BinOp(op="**", left=node, right=self.parse_factor(),
                         line=tok.line, col=tok.col)
        return node

    def parse_postfix(self):
        node = self.parse_atom()
        while True:
            tok = self.peek()
            if self.accept("OP", "."):
                name = self.expect("NAME").value
                node = Attr(obj=node, name=name, line=tok.line, col=tok.col)
            elif self.accept("OP", "("):
                args, kwargs = self.parse_args()
                node = Call(func=node, args=args, kwargs=kwargs,
                            line=tok.line, col=tok.col)
            elif self.accept("OP", "["):
                index = self.parse_expr()
                self.expect("OP", "]")
                node = Index(obj=node, index=index, line=tok.line, col=tok.col)
            else:
                return node

    def parse_args(self):
        args = []
        kwargs = []
        while not self.check("OP", ")"):
            tok = self.peek()
            if tok.kind == "NAME" and self.peek(1).kind == "OP" \
                    and self.peek(1).value == "=":
                self.next()
                self.next()
                kwargs.append((tok.value, self.parse_expr()))
            else:
                if kwargs:
                    raise SplSyntaxError(
                        "positional argument after keyword argument",
                        tok.line, tok.col)
                args.append(self.parse_expr())
            if not self.accept("OP", ","):
                break
        self.expect("OP", ")")
        return tuple(args), tuple(kwargs)

    def parse_atom(self):
        self._forbidden_check()
        tok = self.peek()
        if tok.kind == "NAME":
            self.next()
            return Name(id=tok.value, line=tok.line, col=tok.col)
        if tok.kind == "NUMBER":
            self.next()
            text = tok.value
            value = float(text) if ("." in text or "e" in text or "E" in text) \
                else int(text)
            return Num(value=value, line=tok.line, col=tok.col)
        if tok.kind == "STRING":
            self.next()
            return Str(value=tok.value, line=tok.line, col=tok.col)
        if tok.kind == "KEYWORD" and tok.value in ("True", "False", "None"):
            self.next()
            value = {"True": True, "False": False, "None": None}[tok.value]
            return Const(value=value, line=tok.line, col=tok.col)
        if self.accept("OP", "("):
            node = self.parse_expr()
            self.expect("OP", ")")
            return node
        if self.accept("OP", "["):
            items = []
            while not self.check("OP", "]"):
                items.append(self.parse_expr())
                if not self.accept("OP", ","):
                    break
            self.expect("OP", "]")
            return ListLit(items=tuple(items), line=tok.line, col=tok.col)
        raise SplSyntaxError(
            f"unexpected {tok.value or tok.kind!r}, expected an expression",
            tok.line, tok.col)


def parse(tokens, comments=()):
    """Parse a token stream into a Module AST."""
    return _Parser(list(tokens), comments).parse_module()


def parse_source(source):
    """tokenize + parse in one step; accepts str or ProgramSource."""
    tokens, comments = tokenize(source)
    return parse(tokens, comments)


# --- pretty printer --------------------------------------------------------------

def _unparse_expr(node):
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Str):
        return repr(node.value)
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, ListLit):
        return "[" + ", ".join(_unparse_expr(i) for i in node.items) + "]"
    if isinstance(node, Attr):
        return f"{_unparse_expr(node.obj)}.{node.name}"
    if isinstance(node, Index):
        return f"{_unparse_expr(node.obj)}[{_unparse_expr(node.index)}]"
    if isinstance(node, Call):
        parts = [_unparse_expr(a) for a in node.args]
        parts += [f"{k}={_unparse_expr(v)}" for k, v in node.kwargs]
        return f"{_unparse_expr(node.func)}({', '.join(parts)})"
    if isinstance(node, UnaryOp):
        sep = " " if node.op == "not" else ""
        return f"({node.op}{sep}{_unparse_expr(node.operand)})"
    if isinstance(node, (BinOp, BoolOp, Compare)):
        return (f"({_unparse_expr(node.left)} {node.op} "
                f"{_unparse_expr(node.right)})")
    raise TypeError(f"cannot unparse {node!r}")


def _unparse_block(stmts, depth):
    pad = "    " * depth
    lines = []
    for s in stmts:
        if isinstance(s, Assign):
            lines.append(f"{pad}{s.target} = {_unparse_expr(s.value)}")
        elif isinstance(s, ExprStmt):
            lines.append(f"{pad}{_unparse_expr(s.value)}")
        elif isinstance(s, Return):
            if s.value is None:
                lines.append(f"{pad}return")
            else:
                lines.append(f"{pad}return {_unparse_expr(s.value)}")
        elif isinstance(s, Pass):
            lines.append(f"{pad}pass")
        elif isinstance(s, For):
            lines.append(f"{pad}for {s.var} in {_unparse_expr(s.iterable)}:")
            lines.extend(_unparse_block(s.body, depth + 1))
        elif isinstance(s, If):
            for i, (cond, body) in enumerate(s.branches):
                kw = "if" if i == 0 else "elif"
                lines.append(f"{pad}{kw} {_unparse_expr(cond)}:")
                lines.extend(_unparse_block(body, depth + 1))
            if s.orelse:
                lines.append(f"{pad}else:")
                lines.extend(_unparse_block(s.orelse, depth + 1))
        else:
            raise TypeError(f"cannot unparse {s!r}")
    return lines


def unparse(module):
    """Pretty-print a Module back to source that reparses identically."""
    f = module.func
    lines = [f"def {f.name}({f.param}):"]
    lines.extend(_unparse_block(f.body, 1))
    return "\n".join(lines) + "\n"


def strip_positions(node):
    """Structural copy with line/col zeroed, for AST equality checks."""
    if isinstance(node, tuple):
        return tuple(strip_positions(n) for n in node)
    if isinstance(node, Node):
        kwargs = {}
        for name in node.__dataclass_fields__:
            if name in ("line", "col"):
                continue
            value = getattr(node, name)
            if name == "comments":
                kwargs[name] = ()
                continue
            if isinstance(value, (Node, tuple)):
                kwargs[name] = strip_positions(value)
            else:
                kwargs[name] = value
        return type(node)(**kwargs)
    return node
