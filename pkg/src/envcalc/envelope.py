"""The product algebra A = C∞(M)⊗C∞(N) and its smooth envelope.

An :class:`AElement` is a finite separable sum ``sum_i f_i(x) g_i(y)``.  An
:class:`EnvelopeElement` is the structural pair ``(H, a)`` standing for the
composite ``H∘a`` with ``H`` an expression in ``t1..tk`` and ``a`` a
``k``-tuple of A-elements.  Pairs are never collapsed; ``flat`` (the
substituted, normalized expression in the coordinates) exists for
evaluation and the equality oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .oracle import Equality, OracleConfig, equal
from .symbolic import (
    ONE,
    ZERO,
    Add,
    Const,
    Expr,
    Mul,
    Pow,
    Var,
    as_expr,
    free_vars,
    groups,
    normalize,
    rename,
    substitute,
    var_sort_key,
)


class VariableGroupError(ValueError):
    """An expression uses coordinates from a group it may not mention."""


@dataclass(frozen=True)
class ProductModel:
    """Global chart of M×N = R^m × R^n."""

    m: int = 2
    n: int = 2

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ValueError("m and n must be positive")

    @property
    def x_names(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, self.m + 1))

    @property
    def y_names(self) -> tuple[str, ...]:
        return tuple(f"y{j}" for j in range(1, self.n + 1))

    @property
    def coordinates(self) -> tuple[str, ...]:
        """Basis order x1..xm, y1..yn."""
        return self.x_names + self.y_names

    @property
    def dim(self) -> int:
        return self.m + self.n

    def swapped(self) -> "ProductModel":
        return ProductModel(self.n, self.m)

    def coordinate(self, i: int) -> "AElement":
        name = self.coordinates[i]
        return AElement.x(Var(name)) if name[0] == "x" else AElement.y(Var(name))


def _check_group(e: Expr, allowed: str, what: str):
    bad = groups(e) - {allowed}
    if bad:
        raise VariableGroupError(
            f"{what} must only use group {allowed} variables, got {e} (groups {sorted(bad)})"
        )


@dataclass(frozen=True)
class AElement:
    """Separable sum ``sum f_i(x) * g_i(y)``; terms are kept, not re-collected."""

    terms: tuple[tuple[Expr, Expr], ...] = ()
    flat: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = []
        for f, g in self.terms:
            f, g = normalize(as_expr(f)), normalize(as_expr(g))
            _check_group(f, "X", "left factor")
            _check_group(g, "Y", "right factor")
            terms.append((f, g))
        object.__setattr__(self, "terms", tuple(terms))
        object.__setattr__(
            self, "flat", normalize(Add(tuple(Mul((f, g)) for f, g in terms)))
        )

    @classmethod
    def x(cls, f) -> "AElement":
        return cls(((as_expr(f), ONE),))

    @classmethod
    def y(cls, g) -> "AElement":
        return cls(((ONE, as_expr(g)),))

    @classmethod
    def const(cls, c) -> "AElement":
        c = Fraction(c)
        return cls(((Const(c), ONE),)) if c else cls()

    @classmethod
    def from_expr(cls, e: Expr) -> "AElement":
        """Split an expression into separable terms; raise if it is not in A."""
        nf = normalize(e)
        terms = nf.args if isinstance(nf, Add) else (nf,)
        out = []
        for t in terms:
            factors = t.args if isinstance(t, Mul) else (t,)
            xs, ys = [], []
            coeff = ONE
            for fac in factors:
                g = groups(fac)
                if not g:
                    coeff = fac
                elif g == {"X"}:
                    xs.append(fac)
                elif g == {"Y"}:
                    ys.append(fac)
                else:
                    raise VariableGroupError(f"{fac} mixes x and y; {e} is not an element of A")
            fx = Mul((coeff, *xs)) if xs or coeff != ONE else ONE
            gy = Mul(tuple(ys)) if ys else ONE
            out.append((fx, gy))
        return cls(tuple(out))

    def __add__(self, other: "AElement") -> "AElement":
        return AElement(self.terms + other.terms)

    def __neg__(self) -> "AElement":
        return AElement(tuple((normalize(-f), g) for f, g in self.terms))

    def __sub__(self, other: "AElement") -> "AElement":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return AElement(
            tuple(
                (Mul((f1, f2)), Mul((g1, g2)))
                for f1, g1 in self.terms
                for f2, g2 in other.terms
            )
        )

    __rmul__ = __mul__

    def scale(self, r) -> "AElement":
        r = Fraction(r)
        if not r:
            return AElement()
        return AElement(tuple((Mul((Const(r), f)), g) for f, g in self.terms))

    def is_zero(self) -> bool:
        return self.flat == ZERO

    def __str__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({f})⊗({g})" for f, g in self.terms)


def _t(i: int) -> str:
    return f"t{i}"


@dataclass(frozen=True)
class EnvelopeElement:
    """The composite ``H∘a``; ``H`` may only use ``t1..tk`` with ``k = len(args)``."""

    H: Expr
    args: tuple[AElement, ...] = ()
    flat: Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        H = normalize(as_expr(self.H))
        args = tuple(self.args)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "args", args)
        k = len(args)
        allowed = {_t(i) for i in range(1, k + 1)}
        extra = free_vars(H) - allowed
        if extra:
            raise VariableGroupError(
                f"outer function uses {sorted(extra, key=var_sort_key)} but only {k} arguments given"
            )
        object.__setattr__(self, "flat", flatten_pair(H, args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def __add__(self, other):
        return env_add(self, _coerce(other))

    __radd__ = __add__

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return env_scalar_mul(other, self)
        return env_mul(self, _coerce(other))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return env_scalar_mul(other, self)
        return env_mul(_coerce(other), self)

    def __neg__(self):
        return env_scalar_mul(-1, self)

    def __sub__(self, other):
        return env_add(self, -_coerce(other))

    def __str__(self):
        args = ", ".join(str(a.flat) for a in self.args)
        return f"({self.H})∘({args})"


def _coerce(v) -> EnvelopeElement:
    if isinstance(v, EnvelopeElement):
        return v
    if isinstance(v, AElement):
        return embed_A(v)
    if isinstance(v, (int, Fraction)):
        return const_env(v)
    raise TypeError(f"cannot use {type(v).__name__} as an envelope element")


def flatten_pair(H: Expr, args: Sequence[AElement]) -> Expr:
    return normalize(substitute(H, {_t(i): a.flat for i, a in enumerate(args, 1)}))


def flatten(e: EnvelopeElement) -> Expr:
    """The function ``H∘a`` as an expression in the coordinates (cached on ``e``)."""
    return e.flat


def shift(H: Expr, k: int) -> Expr:
    """Rename ``t_i`` to ``t_{k+i}``."""
    if not k:
        return H
    names = [n for n in free_vars(H) if n[0] == "t"]
    return normalize(rename(H, {n: _t(int(n[1:]) + k) for n in names}))


def env_scalar_mul(r, e: EnvelopeElement) -> EnvelopeElement:
    """``r·(H∘a) = (rH)∘a``."""
    return EnvelopeElement(Mul((Const(Fraction(r)), e.H)), e.args)


def env_add(e: EnvelopeElement, f: EnvelopeElement) -> EnvelopeElement:
    """``H∘a + H'∘a' = (H + H')∘(a⊕a')`` with ``H'`` shifted past ``a``."""
    return EnvelopeElement(Add((e.H, shift(f.H, e.arity))), e.args + f.args)


def env_mul(e: EnvelopeElement, f: EnvelopeElement) -> EnvelopeElement:
    """``(H∘a)·(H'∘a') = (H·H')∘(a⊕a')`` with ``H'`` shifted past ``a``."""
    return EnvelopeElement(Mul((e.H, shift(f.H, e.arity))), e.args + f.args)


def env_sum(items: Iterable[EnvelopeElement]) -> EnvelopeElement:
    """Iterated ``env_add`` built in one step (no intermediate flats)."""
    Hs, args = [], ()
    for it in items:
        Hs.append(shift(it.H, len(args)))
        args += it.args
    if not Hs:
        return zero_env()
    if len(Hs) == 1:
        return EnvelopeElement(Hs[0], args)
    return EnvelopeElement(Add(tuple(Hs)), args)


def embed_A(a: AElement) -> EnvelopeElement:
    """The inclusion ι: A ⊆ Ā, ``a ↦ t1∘(a)``."""
    return EnvelopeElement(Var("t1"), (a,))


def const_env(c) -> EnvelopeElement:
    return EnvelopeElement(Const(Fraction(c)), ())


def zero_env() -> EnvelopeElement:
    return EnvelopeElement(ZERO, ())


def one_env() -> EnvelopeElement:
    return EnvelopeElement(ONE, ())


def env_equal(e: EnvelopeElement, f: EnvelopeElement, cfg: OracleConfig = OracleConfig()) -> Equality:
    """Same function on M×N, decided on flats by the equality oracle."""
    return equal(e.flat, f.flat, cfg)


def coordinate_envelope(model: ProductModel, e: Expr) -> EnvelopeElement:
    """Present an expression in the coordinates as ``H∘(x1,..,xm,y1,..,yn)``."""
    names = model.coordinates
    extra = free_vars(e) - set(names)
    if extra:
        raise VariableGroupError(f"unknown coordinates {sorted(extra, key=var_sort_key)}")
    H = rename(e, {n: _t(i) for i, n in enumerate(names, 1)})
    return EnvelopeElement(H, tuple(model.coordinate(i) for i in range(model.dim)))


# -- X↔Y mirror -------------------------------------------------------------


def swap_expr(e: Expr) -> Expr:
    names = [n for n in free_vars(e) if n[0] in "xy"]
    return normalize(rename(e, {n: ("y" if n[0] == "x" else "x") + n[1:] for n in names}))


def swap_A(a: AElement) -> AElement:
    return AElement(tuple((swap_expr(g), swap_expr(f)) for f, g in a.terms))


def swap_env(e: EnvelopeElement) -> EnvelopeElement:
    return EnvelopeElement(e.H, tuple(swap_A(a) for a in e.args))
