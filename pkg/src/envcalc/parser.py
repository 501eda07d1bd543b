"""Expression parser.

Grammar (``^`` binds tightest; a leading ``-`` is accepted on factors and on
exponents so that printed normal forms parse back)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | base ('^' '-'? integer)?
    base   := integer | ident | func '(' expr ')' | '(' expr ')'
    func   := exp | sin | cos | log
    ident  := [xy][0-9]+ | t[0-9]+
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Collection

from .symbolic import KERNELS, Add, Call, Const, Expr, Mul, Neg, Pow, Var, reciprocal

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")
_IDENT_RE = re.compile(r"^[xyt][0-9]+$")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Tok:
    kind: str  # "int", "name", "op", "end"
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while True:
        m = _TOKEN_RE.match(text, pos)
        if not m or m.end() == pos and not m.group(0):
            break
        if m.group(1) is not None:
            toks.append(_Tok("int", m.group(1), m.start(1)))
        elif m.group(2) is not None:
            toks.append(_Tok("name", m.group(2), m.start(2)))
        elif m.group(3) is not None:
            toks.append(_Tok("op", m.group(3), m.start(3)))
        else:
            break
        pos = m.end()
    toks.append(_Tok("end", "", len(text.rstrip("\n"))))
    return toks


class _Parser:
    def __init__(self, text: str, variables: Collection[str] | None, line: int, column: int = 1):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.variables = None if variables is None else frozenset(variables)
        self.line = line
        self.column = column

    def error(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.toks[self.i]
        raise ParseError(msg, self.line, tok.pos + self.column)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, op: str) -> _Tok:
        if self.tok.kind == "op" and self.tok.text == op:
            return self.take()
        self.error(f"expected {op!r}, found {self.tok.text or 'end of input'!r}")

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def parse(self) -> Expr:
        e = self.expr()
        if self.tok.kind != "end":
            self.error(f"unexpected {self.tok.text!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.at_op("+", "-"):
            op = self.take().text
            rhs = self.term()
            e = Add((e, rhs if op == "+" else Neg(rhs)))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.at_op("*", "/"):
            op = self.take().text
            rhs = self.factor()
            e = Mul((e, rhs if op == "*" else reciprocal(rhs)))
        return e

    def factor(self) -> Expr:
        if self.at_op("-"):
            self.take()
            return Neg(self.factor())
        b = self.base()
        if self.at_op("^"):
            self.take()
            sign = 1
            if self.at_op("-"):
                self.take()
                sign = -1
            if self.tok.kind != "int":
                self.error("exponent must be an integer literal")
            return Pow(b, sign * int(self.take().text))
        return b

    def base(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.take()
            return Const(int(t.text))
        if t.kind == "name":
            self.take()
            if t.text in KERNELS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(t.text, arg)
            if not _IDENT_RE.match(t.text):
                self.error(f"unknown identifier {t.text!r}", t)
            if self.variables is not None and t.text not in self.variables:
                allowed_groups = {v[0] for v in self.variables}
                if t.text[0] in allowed_groups:
                    self.error(f"unknown identifier {t.text!r}", t)
                self.error(
                    f"variable {t.text!r} is in group {t.text[0].upper()}, "
                    f"not allowed here",
                    t,
                )
            return Var(t.text)
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "end":
            self.error("unexpected end of input")
        self.error(f"unexpected {t.text!r}")


def parse_expr(
    text: str, variables: Collection[str] | None = None, *, line: int = 1, column: int = 1
) -> Expr:
    """Parse ``text`` into a raw expression tree.

    ``variables`` restricts which identifiers are accepted; errors carry
    ``line:column`` positions (columns are 1-based, ``column`` is where
    ``text`` starts on its line).
    """
    return _Parser(text, variables, line, column).parse()


def parse_list(
    text: str, variables: Collection[str] | None = None, *, line: int = 1, column: int = 1
) -> list[Expr]:
    """Parse ``[e1, e2, ...]``."""
    p = _Parser(text, variables, line, column)
    p.expect("[")
    out = []
    if not p.at_op("]"):
        out.append(p.expr())
        while p.at_op(","):
            p.take()
            out.append(p.expr())
    p.expect("]")
    if p.tok.kind != "end":
        p.error(f"unexpected {p.tok.text!r}")
    return out
