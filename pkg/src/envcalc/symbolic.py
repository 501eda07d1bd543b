"""Exact symbolic expressions over named coordinates.

Expressions are immutable trees built from rational constants, variables
(``x1.., y1.., t1..``), sums, products, integer powers and the kernels
``exp, sin, cos, log``.  The canonical form produced by :func:`normalize` is a
Laurent polynomial in *atoms* with rational coefficients, where an atom is a
variable, a kernel applied to a normalized argument, or a normalized sum
that only ever appears with a negative exponent (an irreducible denominator).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping

KERNELS = ("exp", "sin", "cos", "log")

_VAR_RE = re.compile(r"^([xyt])([0-9]+)$")


class UnboundVariableError(LookupError):
    """Raised when an evaluation point does not assign a variable."""

    def __init__(self, name: str):
        super().__init__(f"unbound variable {name!r}")
        self.name = name


class Expr:
    __slots__ = ("_hash",)

    # -- operator sugar; results are raw trees, call normalize() explicitly --
    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Neg(as_expr(other))))

    def __rsub__(self, other):
        return Add((as_expr(other), Neg(self)))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Mul((self, reciprocal(as_expr(other))))

    def __rtruediv__(self, other):
        return Mul((as_expr(other), reciprocal(self)))

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers are supported")
        return Pow(self, k)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{type(self).__name__}({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    @property
    def free_vars(self) -> frozenset[str]:
        return free_vars(self)


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        v = Fraction(value)
        object.__setattr__(self, "value", v)
        object.__setattr__(self, "_hash", hash(("C", v)))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (type(other) is Const and self.value == other.value)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        if not _VAR_RE.match(name):
            raise ValueError(f"bad variable name {name!r}")
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "_hash", hash(("V", name)))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (type(other) is Var and self.name == other.name)

    @property
    def group(self) -> str:
        return self.name[0].upper()

    @property
    def index(self) -> int:
        return int(self.name[1:])


class Add(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        args = tuple(args)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash(("+",) + args))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (
            type(other) is Add and self._hash == other._hash and self.args == other.args
        )


class Mul(Expr):
    __slots__ = ("args",)

    def __init__(self, args: Iterable[Expr]):
        args = tuple(args)
        object.__setattr__(self, "args", args)
        object.__setattr__(self, "_hash", hash(("*",) + args))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (
            type(other) is Mul and self._hash == other._hash and self.args == other.args
        )


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg: Expr):
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_hash", hash(("neg", arg)))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (type(other) is Neg and self.arg == other.arg)


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exp", int(exp))
        object.__setattr__(self, "_hash", hash(("^", base, int(exp))))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (
            type(other) is Pow and self.exp == other.exp and self.base == other.base
        )


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn: str, arg: Expr):
        if fn not in KERNELS:
            raise ValueError(f"unknown kernel {fn!r}")
        object.__setattr__(self, "fn", fn)
        object.__setattr__(self, "arg", arg)
        object.__setattr__(self, "_hash", hash((fn, arg)))

    __hash__ = Expr.__hash__

    def __setattr__(self, *_):
        raise AttributeError("immutable")

    def __eq__(self, other):
        return self is other or (
            type(other) is Call and self.fn == other.fn and self.arg == other.arg
        )


ZERO = Const(0)
ONE = Const(1)


def as_expr(v) -> Expr:
    if isinstance(v, Expr):
        return v
    if isinstance(v, (int, Fraction)):
        return Const(v)
    if isinstance(v, str):
        return Var(v)
    raise TypeError(f"cannot convert {type(v).__name__} to Expr")


def var(name: str) -> Var:
    return Var(name)


def exp(e) -> Expr:
    return Call("exp", as_expr(e))


def sin(e) -> Expr:
    return Call("sin", as_expr(e))


def cos(e) -> Expr:
    return Call("cos", as_expr(e))


def log(e) -> Expr:
    return Call("log", as_expr(e))


def reciprocal(e: Expr) -> Expr:
    """Syntactic reciprocal; ``b^k`` becomes ``b^-k``."""
    if type(e) is Pow:
        return Pow(e.base, -e.exp)
    return Pow(e, -1)


def var_sort_key(name: str) -> tuple[str, int]:
    return name[0], int(name[1:])


@lru_cache(maxsize=None)
def free_vars(e: Expr) -> frozenset[str]:
    t = type(e)
    if t is Var:
        return frozenset((e.name,))
    if t is Const:
        return frozenset()
    if t in (Add, Mul):
        out = frozenset()
        for a in e.args:
            out |= free_vars(a)
        return out
    if t is Pow:
        return free_vars(e.base)
    return free_vars(e.arg)


def groups(e: Expr) -> frozenset[str]:
    return frozenset(n[0].upper() for n in free_vars(e))


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _const_str(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        return (str(v.numerator), _PREC_ATOM if v >= 0 else _PREC_NEG)
    s = f"{abs(v.numerator)}/{v.denominator}"
    return ("-" + s, _PREC_NEG) if v < 0 else (s, _PREC_MUL)


def _wrap(s: str, prec: int, need: int) -> str:
    return f"({s})" if prec < need else s


def _negated_term(t: Expr) -> Expr | None:
    """If t prints with a leading minus in a sum, return its negation."""
    if type(t) is Neg:
        return t.arg
    if type(t) is Const and t.value < 0:
        return Const(-t.value)
    if type(t) is Mul and t.args and type(t.args[0]) is Const and t.args[0].value < 0:
        c = -t.args[0].value
        rest = t.args[1:]
        if c == 1:
            return rest[0] if len(rest) == 1 else Mul(rest)
        return Mul((Const(c),) + rest)
    return None


def _fmt(e: Expr) -> tuple[str, int]:
    t = type(e)
    if t is Const:
        return _const_str(e.value)
    if t is Var:
        return e.name, _PREC_ATOM
    if t is Call:
        return f"{e.fn}({_fmt(e.arg)[0]})", _PREC_ATOM
    if t is Neg:
        s, p = _fmt(e.arg)
        return "-" + _wrap(s, p, _PREC_POW), _PREC_NEG
    if t is Pow:
        s, p = _fmt(e.base)
        return f"{_wrap(s, p, _PREC_ATOM)}^{e.exp}", _PREC_POW
    if t is Add:
        if not e.args:
            return "0", _PREC_ATOM
        parts = []
        for i, a in enumerate(e.args):
            neg = _negated_term(a) if i else None
            if neg is not None:
                s, p = _fmt(neg)
                parts.append(" - " + _wrap(s, p, _PREC_MUL))
            else:
                s, p = _fmt(a)
                # left operand may be a sum; right operands must bind tighter
                need = _PREC_ADD if i == 0 else _PREC_MUL
                parts.append((" + " if i else "") + _wrap(s, p, need))
        return "".join(parts), _PREC_ADD
    if t is Mul:
        if not e.args:
            return "1", _PREC_ATOM
        parts = []
        for i, a in enumerate(e.args):
            if i and type(a) is Pow and a.exp < 0 and type(a.base) is not Pow:
                inner = a.base if a.exp == -1 else Pow(a.base, -a.exp)
                s, p = _fmt(inner)
                parts.append("/" + _wrap(s, p, _PREC_POW))
            else:
                s, p = _fmt(a)
                need = _PREC_MUL if i == 0 else _PREC_NEG + 1
                if i == 0 and p == _PREC_NEG:
                    need = _PREC_NEG
                parts.append(("*" if i else "") + _wrap(s, p, need))
        return "".join(parts), _PREC_MUL
    raise TypeError(t)


@lru_cache(maxsize=65536)
def to_string(e: Expr) -> str:
    return _fmt(e)[0]


# ---------------------------------------------------------------------------
# canonical form: Laurent polynomials in atoms
# ---------------------------------------------------------------------------

# A monomial is a sorted tuple of (atom, exponent) pairs; a Poly maps
# monomials to nonzero Fractions.
Monomial = tuple
Poly = dict


@lru_cache(maxsize=None)
def _atom_key(a: Expr) -> tuple:
    if type(a) is Var:
        return (0, a.name[0], a.index, "")
    if type(a) is Call:
        return (1, a.fn, 0, to_string(a.arg))
    return (2, "", 0, to_string(a))


def _mono_key(m: Monomial) -> tuple:
    # graded lexicographic: higher total degree first, then atoms in order
    return (-sum(e for _, e in m), tuple((_atom_key(a), -e) for a, e in m))


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        d[a] = d.get(a, 0) + e
    return tuple(sorted(((a, e) for a, e in d.items() if e), key=lambda p: _atom_key(p[0])))


def _padd(p: Poly, q: Poly) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _pscale(p: Poly, c: Fraction) -> Poly:
    if not c:
        return {}
    return {m: v * c for m, v in p.items()}


def _pmul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _ppow(p: Poly, k: int) -> Poly:
    if k < 0:
        return _ppow(_precip(p), -k)
    out: Poly = {(): Fraction(1)}
    base = p
    while k:
        if k & 1:
            out = _pmul(out, base)
        k >>= 1
        if k:
            base = _pmul(base, base)
    return out


def _mono_poly(m: Monomial) -> Poly:
    """Monomial as a Poly, expanding irreducible denominators that went positive."""
    plain = tuple((a, e) for a, e in m if not (type(a) is Add and e > 0))
    out: Poly = {plain: Fraction(1)}
    for a, e in m:
        if type(a) is Add and e > 0:
            out = _pmul(out, _ppow(_to_poly(a), e))
    return out


def _sorted_terms(p: Poly) -> list:
    return sorted(p.items(), key=lambda mc: _mono_key(mc[0]))


def _precip(p: Poly) -> Poly:
    if not p:
        return {((ZERO, -1),): Fraction(1)}
    if len(p) == 1:
        ((m, c),) = p.items()
        inv = tuple((a, -e) for a, e in m)
        return _pscale(_mono_poly(inv), 1 / c)
    (_, lead), *_ = _sorted_terms(p)
    atom = _from_poly(_pscale(p, 1 / lead))
    return {((atom, -1),): 1 / lead}


def _kernel_poly(fn: str, arg: Poly) -> Poly:
    if not arg:
        if fn == "exp" or fn == "cos":
            return {(): Fraction(1)}
        if fn == "sin":
            return {}
    if fn == "log" and arg == {(): Fraction(1)}:
        return {}
    return {((Call(fn, _from_poly(arg)), 1),): Fraction(1)}


@lru_cache(maxsize=200000)
def _to_poly_cached(e: Expr) -> tuple:
    return tuple(_to_poly_impl(e).items())


def _to_poly(e: Expr) -> Poly:
    return dict(_to_poly_cached(e))


def _to_poly_impl(e: Expr) -> Poly:
    t = type(e)
    if t is Const:
        return {(): e.value} if e.value else {}
    if t is Var:
        return {((e, 1),): Fraction(1)}
    if t is Add:
        out: Poly = {}
        for a in e.args:
            out = _padd(out, _to_poly(a))
        return out
    if t is Mul:
        out = {(): Fraction(1)}
        for a in e.args:
            out = _pmul(out, _to_poly(a))
            if not out:
                break
        return out
    if t is Neg:
        return _pscale(_to_poly(e.arg), Fraction(-1))
    if t is Pow:
        return _ppow(_to_poly(e.base), e.exp)
    if t is Call:
        return _kernel_poly(e.fn, _to_poly(e.arg))
    raise TypeError(t)


def _from_poly(p: Poly) -> Expr:
    if not p:
        return ZERO
    terms = []
    for m, c in _sorted_terms(p):
        factors: list[Expr] = []
        for a, k in m:
            factors.append(a if k == 1 else Pow(a, k))
        if c != 1 or not factors:
            factors.insert(0, Const(c))
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


@lru_cache(maxsize=200000)
def normalize(e: Expr) -> Expr:
    """Canonical form; idempotent, and equal canonical trees mean equal functions."""
    return _from_poly(_to_poly(e))


def is_zero(e: Expr) -> bool:
    return not _to_poly(e)


def is_polynomial(e: Expr) -> bool:
    """True when the expression is a polynomial in its variables (no kernels or quotients)."""
    t = type(e)
    if t in (Const, Var):
        return True
    if t in (Add, Mul):
        return all(is_polynomial(a) for a in e.args)
    if t is Neg:
        return is_polynomial(e.arg)
    if t is Pow:
        return e.exp >= 0 and is_polynomial(e.base)
    return False


# ---------------------------------------------------------------------------
# differentiation and substitution
# ---------------------------------------------------------------------------


def _dpoly(p: Poly, v: str) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        for i, (a, k) in enumerate(m):
            if v not in free_vars(a):
                continue
            da = _datom(a, v)
            if not da:
                continue
            rest = m[:i] + (((a, k - 1),) if k != 1 else ()) + m[i + 1 :]
            out = _padd(out, _pmul({rest: c * k}, da))
    return out


def _datom(a: Expr, v: str) -> Poly:
    t = type(a)
    if t is Var:
        return {(): Fraction(1)} if a.name == v else {}
    if t is Add:
        return _dpoly(_to_poly(a), v)
    if t is Call:
        arg = _to_poly(a.arg)
        darg = _dpoly(arg, v)
        if not darg:
            return {}
        if a.fn == "exp":
            outer = {((a, 1),): Fraction(1)}
        elif a.fn == "sin":
            outer = _kernel_poly("cos", arg)
        elif a.fn == "cos":
            outer = _pscale(_kernel_poly("sin", arg), Fraction(-1))
        else:
            outer = _precip(arg)
        return _pmul(outer, darg)
    if t is Const:  # the 1/0 atom
        return {}
    raise TypeError(t)


@lru_cache(maxsize=200000)
def partial(e: Expr, v) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``, normalized."""
    name = v.name if isinstance(v, Var) else v
    return _from_poly(_dpoly(_to_poly(e), name))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (raw tree; normalize afterwards)."""
    t = type(e)
    if t is Var:
        return mapping.get(e.name, e)
    if t is Const:
        return e
    if not (free_vars(e) & mapping.keys()):
        return e
    if t is Add:
        return Add(tuple(substitute(a, mapping) for a in e.args))
    if t is Mul:
        return Mul(tuple(substitute(a, mapping) for a in e.args))
    if t is Neg:
        return Neg(substitute(e.arg, mapping))
    if t is Pow:
        return Pow(substitute(e.base, mapping), e.exp)
    return Call(e.fn, substitute(e.arg, mapping))


def rename(e: Expr, mapping: Mapping[str, str]) -> Expr:
    return substitute(e, {k: Var(v) for k, v in mapping.items()})


# ---------------------------------------------------------------------------
# numeric evaluation
# ---------------------------------------------------------------------------


def _code(e: Expr) -> str:
    t = type(e)
    if t is Const:
        return repr(float(e.value))
    if t is Var:
        return e.name
    if t is Add:
        return "(" + " + ".join(_code(a) for a in e.args) + ")" if e.args else "0.0"
    if t is Mul:
        return "(" + " * ".join(_code(a) for a in e.args) + ")" if e.args else "1.0"
    if t is Neg:
        return f"(-{_code(e.arg)})"
    if t is Pow:
        if e.exp < 0:
            return f"(1.0 / {_code(e.base)} ** {-e.exp})"
        return f"({_code(e.base)} ** {e.exp})"
    return f"_{e.fn}({_code(e.arg)})"


_NS = {"_exp": math.exp, "_sin": math.sin, "_cos": math.cos, "_log": math.log}


@lru_cache(maxsize=100000)
def compile_expr(e: Expr) -> Callable[[Mapping], float]:
    """Compile ``e`` into a function of a point mapping; non-finite results map to nan."""
    names = sorted(free_vars(e), key=var_sort_key)
    body = _code(e)
    src = "def _f(" + ", ".join(names) + "):\n    return " + body
    ns = dict(_NS)
    exec(src, ns)
    raw = ns["_f"]

    def f(point: Mapping) -> float:
        try:
            args = [point[n] for n in names]
        except KeyError as exc:
            raise UnboundVariableError(exc.args[0]) from None
        try:
            v = raw(*[float(a) for a in args])
        except (OverflowError, ValueError, ZeroDivisionError):
            return math.nan
        if isinstance(v, complex):
            return math.nan
        return float(v)

    return f


def evaluate(e: Expr, point: Mapping) -> float:
    """Floating evaluation at a point mapping variable names to numbers.

    Domain violations (log of a non-positive number, division by zero,
    overflow) give ``nan`` or ``inf`` rather than raising.
    """
    point = {(k.name if isinstance(k, Var) else k): v for k, v in point.items()}
    return compile_expr(e)(point)
