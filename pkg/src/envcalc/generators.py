"""Seeded random instances for the property suites.

Everything draws from :class:`~envcalc.oracle.SplitMix64`, so a (seed, case)
pair always yields the same objects.  Generated functions are kept finite on
the default box [-1, 1]^(m+n): logarithms and quotients are guarded by
strictly positive expressions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .calculus import DerivationA, OneFormA, OneFormEnv, SmoothenedOneForm, d_A
from .envelope import AElement, EnvelopeElement, ProductModel, embed_A
from .modules import A_TIER, FinPresModule, ModuleElement, Region
from .oracle import SplitMix64
from .symbolic import Add, Call, Const, Expr, Mul, Neg, Pow, Var, normalize, rename, substitute


def rand_const(rng: SplitMix64, tame: bool = False) -> Const:
    num = rng.between(-1, 1) if tame else rng.between(-3, 3)
    den = rng.choice((1, 1, 2, 3))
    return Const(Fraction(num, den))


def _positive(rng: SplitMix64, names: Sequence[str], depth: int, poly: bool, tame: bool = False) -> Expr:
    """An expression bounded below by 1 on the whole space."""
    u = rand_expr(rng, names, depth, poly=poly, tame=tame)
    if poly or rng.chance(1, 2):
        return Add((Const(rng.between(1, 2)), Pow(u, 2)))
    return Add((Const(2), Call(rng.choice(("sin", "cos")), u)))


def rand_expr(
    rng: SplitMix64, names: Sequence[str], depth: int = 2, *, poly: bool = False, tame: bool = False
) -> Expr:
    """Random raw expression over ``names``; ``poly`` restricts to polynomials.

    ``tame`` keeps constants in [-1, 1] and powers at 2, so third derivatives
    stay small enough for a central difference with h = 1e-4 to resolve.
    """
    if depth <= 0 or rng.chance(1, 4):
        if names and rng.chance(2, 3):
            return Var(rng.choice(names))
        return rand_const(rng, tame)
    kinds = ["add", "add", "mul", "mul", "sub", "pow"]
    if not poly:
        kinds += ["exp", "sin", "cos", "log", "div"]
    k = rng.choice(kinds)
    sub = depth - 1
    if k == "add":
        return Add((rand_expr(rng, names, sub, poly=poly, tame=tame), rand_expr(rng, names, sub, poly=poly, tame=tame)))
    if k == "sub":
        return Add((rand_expr(rng, names, sub, poly=poly, tame=tame), Neg(rand_expr(rng, names, sub, poly=poly, tame=tame))))
    if k == "mul":
        return Mul((rand_expr(rng, names, sub, poly=poly, tame=tame), rand_expr(rng, names, sub, poly=poly, tame=tame)))
    if k == "pow":
        return Pow(rand_expr(rng, names, min(sub, 1), poly=poly, tame=tame), 2 if tame else rng.between(2, 3))
    if k == "log":
        return Call("log", _positive(rng, names, min(sub, 1), poly, tame))
    if k == "div":
        return Mul((rand_expr(rng, names, sub, tame=tame), Pow(_positive(rng, names, min(sub, 1), poly, tame), -1)))
    # keep exponentials tame: scale the argument down
    arg = rand_expr(rng, names, min(sub, 1), poly=poly, tame=tame)
    if k == "exp":
        arg = Mul((Const(Fraction(1, 2)), arg))
    return Call(k, arg)


def rand_A(
    rng: SplitMix64,
    model: ProductModel,
    *,
    terms: int | None = None,
    depth: int = 1,
    poly: bool = False,
    tame: bool = False,
) -> AElement:
    n = terms if terms is not None else rng.between(1, 2)
    out = []
    for _ in range(n):
        f = rand_expr(rng, model.x_names, depth, poly=poly, tame=tame)
        g = rand_expr(rng, model.y_names, depth, poly=poly, tame=tame)
        out.append((f, g))
    return AElement(tuple(out))


def t_names(k: int) -> tuple[str, ...]:
    return tuple(f"t{i}" for i in range(1, k + 1))


def rand_env(
    rng: SplitMix64,
    model: ProductModel,
    *,
    poly: bool = False,
    max_arity: int = 3,
    depth: int = 2,
    tame: bool = False,
) -> EnvelopeElement:
    k = rng.between(1, max_arity)
    H = rand_expr(rng, t_names(k), depth, poly=poly, tame=tame)
    args = tuple(rand_A(rng, model, depth=1, poly=poly, tame=tame) for _ in range(k))
    return EnvelopeElement(H, args)


def rand_small_env(rng: SplitMix64, model: ProductModel, *, poly: bool = False) -> EnvelopeElement:
    """Cheaper element for use as a coefficient or scalar."""
    return rand_env(rng, model, poly=poly, max_arity=2, depth=1)


def rerepresent(rng: SplitMix64, e: EnvelopeElement, model: ProductModel) -> EnvelopeElement:
    """A structurally different pair with the same composite function."""
    alt = _rerepresent(rng, e, model)
    if alt == e:
        alt = EnvelopeElement(e.H, e.args + (rand_A(rng, model),))
    return alt


def _rerepresent(rng: SplitMix64, e: EnvelopeElement, model: ProductModel) -> EnvelopeElement:
    k = e.arity
    choice = rng.below(4) if k else 3
    if choice == 0 and any(len(a.terms) > 1 for a in e.args):
        # split one argument a_i = b + c into two slots
        i = next(i for i, a in enumerate(e.args) if len(a.terms) > 1)
        a = e.args[i]
        b, c = AElement(a.terms[:1]), AElement(a.terms[1:])
        ti, tn = Var(f"t{i + 1}"), Var(f"t{k + 1}")
        H = _subst_t(e.H, {ti.name: Add((ti, tn))})
        args = e.args[:i] + (b,) + e.args[i + 1 :] + (c,)
        return EnvelopeElement(H, args)
    if choice == 1 and k:
        # rescale an argument: H(.., t_i, ..) with a_i  ==  H(.., 2 t_i, ..) with a_i / 2
        i = rng.below(k)
        ti = Var(f"t{i + 1}")
        H = _subst_t(e.H, {ti.name: Mul((Const(2), ti))})
        args = e.args[:i] + (e.args[i].scale(Fraction(1, 2)),) + e.args[i + 1 :]
        return EnvelopeElement(H, args)
    if choice == 2 and k > 1:
        # reverse the argument order
        H = rename(e.H, {f"t{i}": f"t{k + 1 - i}" for i in range(1, k + 1)})
        return EnvelopeElement(H, tuple(reversed(e.args)))
    # pad with an unused argument
    return EnvelopeElement(e.H, e.args + (rand_A(rng, model),))


def _subst_t(H: Expr, mapping: dict[str, Expr]) -> Expr:
    return normalize(substitute(H, mapping))


def rand_derivation(rng: SplitMix64, model: ProductModel) -> DerivationA:
    values = []
    for _ in range(model.dim):
        r = rng.below(4)
        if r == 0:
            values.append(embed_A(AElement()))
        elif r == 1:
            values.append(embed_A(rand_A(rng, model, terms=1)))
        else:
            values.append(rand_small_env(rng, model))
    return DerivationA(model, tuple(values))


def rand_one_form_env(rng: SplitMix64, model: ProductModel) -> OneFormEnv:
    return OneFormEnv(model, tuple(rand_small_env(rng, model) for _ in range(model.dim)))


def rand_one_form_A(rng: SplitMix64, model: ProductModel) -> OneFormA:
    if rng.chance(1, 2):
        return d_A(model, rand_A(rng, model))
    return OneFormA(model, tuple(rand_A(rng, model, terms=1) for _ in range(model.dim)))


def rand_smoothened(rng: SplitMix64, model: ProductModel) -> SmoothenedOneForm:
    n = rng.between(1, 3)
    return SmoothenedOneForm(
        model, tuple((rand_small_env(rng, model), rand_one_form_A(rng, model)) for _ in range(n))
    )


def rand_region(rng: SplitMix64, model: ProductModel) -> Region:
    box = {}
    for name in model.coordinates:
        lo = rng.fraction(-1, 1, 8)
        hi = rng.fraction(-1, 1, 8)
        if lo == hi:
            hi = lo + Fraction(1, 8)
        box[name] = (min(lo, hi), max(lo, hi))
    return Region.of(model, box)


def rand_denominator_expr(rng: SplitMix64, model: ProductModel, region: Region) -> Expr:
    """A likely-nonvanishing function on ``region`` (certification still decides)."""
    names = model.coordinates
    u = rand_expr(rng, names, 1, poly=True)
    r = rng.below(4)
    if r == 0:
        return Call("exp", u)
    if r == 1:
        return Add((Const(2), Call("sin", u)))
    if r == 2:
        return Add((Const(1), Pow(u, 2)))
    # a coordinate on a box where it keeps one sign
    name = rng.choice(names)
    lo, hi = region.as_mapping()[name]
    shift = -lo + Fraction(1, 4) if lo <= 0 else Fraction(0)
    return Add((Var(name), Const(shift)))


def rand_module(
    rng: SplitMix64, model: ProductModel, group: str = "X", *, gens: int | None = None, relations: int | None = None
) -> FinPresModule:
    """Random A-module whose relation entries only use ``group`` variables (or both if ``XY``)."""
    p = gens if gens is not None else rng.between(1, 3)
    nrel = relations if relations is not None else rng.between(0, min(2, p))
    rels = []
    while len(rels) < nrel:
        row = tuple(_group_scalar(rng, model, group) for _ in range(p))
        if any(not s.is_zero() for s in row):
            rels.append(row)
    return FinPresModule(A_TIER, p, tuple(rels))


def _group_scalar(rng: SplitMix64, model: ProductModel, group: str) -> AElement:
    if rng.chance(1, 4):
        return AElement()
    if group == "X":
        return AElement.x(rand_expr(rng, model.x_names, 1, poly=True))
    if group == "Y":
        return AElement.y(rand_expr(rng, model.y_names, 1, poly=True))
    return rand_A(rng, model, terms=1, poly=True)


def rand_module_element(rng: SplitMix64, model: ProductModel, P: FinPresModule, group: str = "XY") -> ModuleElement:
    return P.element([_group_scalar(rng, model, group) for _ in range(P.gens)])
