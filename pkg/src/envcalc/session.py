"""Session files: named functions and derivations over a product model.

One declaration per line::

    # comment
    f := exp(x1*y1) + 2/3          function on M×N
    g := t1^2 @ [x1 + y1]          explicit pair H∘(a1, ..) (args must be separable)
    X := [y1, 0, x1, 1]            derivation, one value per coordinate

A function that splits into a sum of x-part times y-part is kept as an
element of A; anything else is presented over the coordinates.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Union

from .calculus import DerivationA
from .envelope import AElement, EnvelopeElement, ProductModel, VariableGroupError, coordinate_envelope, embed_A
from .oracle import OracleConfig
from .parser import ParseError, parse_expr, parse_list
from .suites import Session
from .symbolic import Expr, normalize

Declaration = Union[AElement, EnvelopeElement, DerivationA]

_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def as_function(model: ProductModel, e: Expr) -> AElement | EnvelopeElement:
    """``e`` as an element of A when it is separable, else as an envelope element."""
    try:
        return AElement.from_expr(normalize(e))
    except VariableGroupError:
        return coordinate_envelope(model, e)


def as_envelope(model: ProductModel, e: Expr) -> EnvelopeElement:
    f = as_function(model, e)
    return embed_A(f) if isinstance(f, AElement) else f


def _function(model: ProductModel, text: str, line: int, column: int) -> AElement | EnvelopeElement:
    at = text.find("@")
    if at < 0:
        return as_function(model, parse_expr(text, model.coordinates, line=line, column=column))
    head = text[:at]
    body = text[at + 1 :]
    H = parse_expr(head, None, line=line, column=column)
    lead = len(body) - len(body.lstrip())
    args = parse_list(body.strip(), model.coordinates, line=line, column=column + at + 1 + lead)
    bad = [v for v in H.free_vars if v[0] != "t" or int(v[1:]) > len(args) or int(v[1:]) < 1]
    if bad:
        raise ParseError(f"outer function may only use t1..t{len(args)}, found {sorted(bad)[0]}", line, column)
    try:
        return EnvelopeElement(H, tuple(AElement.from_expr(normalize(a)) for a in args))
    except VariableGroupError as exc:
        raise ParseError(f"arguments must be separable: {exc}", line, column + at + 1) from None


def parse_session(
    text: str, model: ProductModel = ProductModel(), oracle: OracleConfig = OracleConfig()
) -> Session:
    decls: dict[str, Declaration] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if ":=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ParseError("expected 'name := value'", lineno, col)
        lhs, rhs = line.split(":=", 1)
        name = lhs.strip()
        name_col = len(lhs) - len(lhs.lstrip()) + 1
        if not name or not set(name) <= _NAME_CHARS or name[0].isdigit():
            raise ParseError(f"bad declaration name {name!r}", lineno, name_col)
        if name in decls:
            raise ParseError(f"{name!r} is declared twice", lineno, name_col)
        col = len(lhs) + 2 + len(rhs) - len(rhs.lstrip()) + 1
        body = rhs.strip()
        if body.startswith("["):
            values = parse_list(body, model.coordinates, line=lineno, column=col)
            if len(values) != model.dim:
                raise ParseError(f"derivation needs {model.dim} values, got {len(values)}", lineno, col)
            decls[name] = DerivationA(model, tuple(as_envelope(model, v) for v in values))
        else:
            decls[name] = _function(model, body, lineno, col)
    return Session(model, oracle, decls)


def load_session(path: str | Path, model: ProductModel = ProductModel(), oracle: OracleConfig = OracleConfig()) -> Session:
    return parse_session(Path(path).read_text(encoding="utf-8"), model, oracle)


def with_oracle(session: Session, **changes) -> Session:
    return replace(session, oracle=replace(session.oracle, **changes))
