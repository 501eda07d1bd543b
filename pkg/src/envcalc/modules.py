"""Finitely presented modules, smoothening and smoothened tensor products.

Scalars live in one of two tiers: ``"A"`` (:class:`AElement`) or
``"envelope"`` (:class:`EnvelopeElement`).  A module is given by a number of
generators and a list of relation vectors; elements are coefficient vectors,
compared modulo the relation span.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

from .envelope import (
    AElement,
    EnvelopeElement,
    ProductModel,
    VariableGroupError,
    embed_A,
    env_add,
    env_mul,
    env_sum,
    one_env,
    swap_A,
    swap_env,
    swap_expr,
    zero_env,
)
from .intervals import certify_nonvanishing
from .oracle import (
    Equality,
    OracleConfig,
    SampleStream,
    Verdict,
    equal,
    finite_points,
    rank_at,
)
from .symbolic import ONE, ZERO, Add, Const, Expr, Mul, compile_expr, free_vars, groups, normalize, reciprocal

A_TIER = "A"
ENV_TIER = "envelope"

Scalar = Union[AElement, EnvelopeElement]


def _flat(s: Scalar) -> Expr:
    return s.flat


def _zero(tier: str) -> Scalar:
    return AElement() if tier == A_TIER else zero_env()


def _check_tier(s, tier: str):
    want = AElement if tier == A_TIER else EnvelopeElement
    if not isinstance(s, want):
        raise TypeError(f"expected {want.__name__} in the {tier} tier, got {type(s).__name__}")


@dataclass(frozen=True)
class FinPresModule:
    """Module with ``gens`` generators modulo the span of ``relations``."""

    tier: str
    gens: int
    relations: tuple[tuple[Scalar, ...], ...] = ()

    def __post_init__(self):
        if self.tier not in (A_TIER, ENV_TIER):
            raise ValueError(f"unknown scalar tier {self.tier!r}")
        if self.gens < 0:
            raise ValueError("gens must be >= 0")
        rels = tuple(tuple(r) for r in self.relations)
        for r in rels:
            if len(r) != self.gens:
                raise ValueError(f"relation has {len(r)} entries, expected {self.gens}")
            for s in r:
                _check_tier(s, self.tier)
            if all(_flat(s) == ZERO for s in r):
                raise ValueError("the zero relation is not allowed")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def free(cls, rank: int, tier: str = A_TIER) -> "FinPresModule":
        return cls(tier, rank, ())

    def element(self, coeffs: Sequence[Scalar]) -> "ModuleElement":
        return ModuleElement(self, tuple(coeffs))

    def zero(self) -> "ModuleElement":
        return ModuleElement(self, tuple(_zero(self.tier) for _ in range(self.gens)))

    def generator(self, i: int) -> "ModuleElement":
        one = AElement.const(1) if self.tier == A_TIER else one_env()
        return self.element([one if j == i else _zero(self.tier) for j in range(self.gens)])

    def relation_flats(self) -> list[list[Expr]]:
        return [[_flat(s) for s in r] for r in self.relations]

    def variable_groups(self) -> frozenset[str]:
        out = frozenset()
        for r in self.relations:
            for s in r:
                out |= groups(_flat(s))
        return out


@dataclass(frozen=True)
class ModuleElement:
    module: FinPresModule
    coeffs: tuple[Scalar, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(self.coeffs))
        if len(self.coeffs) != self.module.gens:
            raise ValueError(f"expected {self.module.gens} coefficients, got {len(self.coeffs)}")
        for s in self.coeffs:
            _check_tier(s, self.module.tier)

    def __add__(self, other: "ModuleElement") -> "ModuleElement":
        return ModuleElement(self.module, tuple(_add(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "ModuleElement":
        return self.scale(AElement.const(-1) if self.module.tier == A_TIER else -one_env())

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s: Scalar) -> "ModuleElement":
        """Scalar action of the module's tier."""
        return ModuleElement(self.module, tuple(_mul(s, c) for c in self.coeffs))

    def flats(self) -> list[Expr]:
        return [_flat(c) for c in self.coeffs]


def _add(a: Scalar, b: Scalar) -> Scalar:
    return a + b if isinstance(a, AElement) else env_add(a, b)


def _mul(a: Scalar, b: Scalar) -> Scalar:
    return a * b if isinstance(a, AElement) else env_mul(a, b)


# -- equality modulo relations ------------------------------------------------


def _combine(results: Sequence[Equality]) -> Equality:
    worst = max((r.residual for r in results), default=0.0)
    samples = max((r.samples for r in results), default=0)
    for r in results:
        if r.verdict is Verdict.NOT_EQUAL:
            return r
    if any(r.verdict is Verdict.UNDETERMINED for r in results):
        return Equality(Verdict.UNDETERMINED, samples, worst)
    return Equality(Verdict.EQUAL, samples, worst)


def vector_equal(
    lhs: Sequence[Expr],
    rhs: Sequence[Expr],
    relations: Sequence[Sequence[Expr]] = (),
    cfg: OracleConfig = OracleConfig(),
) -> Equality:
    """Compare coefficient vectors modulo the span of ``relations``.

    Without relations this is coefficientwise :func:`equal`.  With relations,
    a coefficientwise-equal pair is Equal; otherwise the difference is tested
    for membership in the pointwise relation span at sampled points:
    a point where it falls outside gives NotEqual, else Undetermined.
    """
    per = [equal(a, b, cfg) for a, b in zip(lhs, rhs)]
    direct = _combine(per)
    if not relations or direct.verdict is Verdict.EQUAL:
        return direct
    diff = [normalize(a - b) for a, b in zip(lhs, rhs)]
    fns = [compile_expr(d) for d in diff]
    rel_fns = [[compile_expr(s) for s in r] for r in relations]
    names = set()
    for d in diff:
        names |= free_vars(d)
    for r in relations:
        for s in r:
            names |= free_vars(s)
    stream = SampleStream(cfg.seed, cfg.domain(names), cfg.samples)
    every = fns + [f for r in rel_fns for f in r]
    used = 0
    worst = 0.0
    for p in finite_points(every, stream, cfg.samples):
        used += 1
        d = [f(p) for f in fns]
        if max(abs(v) for v in d) <= cfg.tolerance:
            continue
        R = [[f(p) for f in r] for r in rel_fns]
        r0 = rank_at(R) if R else 0
        r1 = rank_at(R + [d])
        if r1 > r0:
            return Equality(Verdict.NOT_EQUAL, used, max(abs(v) for v in d), dict(p))
        worst = max(worst, max(abs(v) for v in d))
    return Equality(Verdict.UNDETERMINED, used, worst)


def module_equal(u: ModuleElement, v: ModuleElement, cfg: OracleConfig = OracleConfig()) -> Equality:
    if u.module.gens != v.module.gens:
        raise ValueError("elements of different modules")
    return vector_equal(u.flats(), v.flats(), u.module.relation_flats(), cfg)


def pointwise_rank(P: FinPresModule, point: Mapping) -> int:
    """Fiber dimension at a point: generators minus the rank of the evaluated relations."""
    if not P.relations:
        return P.gens
    rows = [[compile_expr(s)(point) for s in r] for r in P.relation_flats()]
    return P.gens - rank_at(rows)


# -- smoothening --------------------------------------------------------------


def smoothen(P: FinPresModule) -> FinPresModule:
    """Base change Ā⊗_A P: same generators, relation entries pushed through ι."""
    if P.tier != A_TIER:
        raise ValueError("smoothen expects a module over A")
    return FinPresModule(ENV_TIER, P.gens, tuple(tuple(embed_A(s) for s in r) for r in P.relations))


def base_change(u: ModuleElement) -> ModuleElement:
    """``p ↦ 1⊗p`` into the smoothened module."""
    return ModuleElement(smoothen(u.module), tuple(embed_A(c) for c in u.coeffs))


@dataclass(frozen=True)
class TensorElement:
    """Unnormalized formal sum ``sum ā_i ⊗ p_i`` in Ā⊗_A P."""

    module: FinPresModule
    summands: tuple[tuple[EnvelopeElement, ModuleElement], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))
        if self.module.tier != A_TIER:
            raise ValueError("tensor factor must be a module over A")
        for s, p in self.summands:
            _check_tier(s, ENV_TIER)
            if p.module.gens != self.module.gens:
                raise ValueError("summand lives in a different module")

    def __add__(self, other: "TensorElement") -> "TensorElement":
        return TensorElement(self.module, self.summands + other.summands)

    def scale(self, s: EnvelopeElement) -> "TensorElement":
        return TensorElement(self.module, tuple((env_mul(s, a), p) for a, p in self.summands))


def tensor_normalize(t: TensorElement) -> ModuleElement:
    """Push scalars into coordinates: ``sum ā_i⊗p_i ↦ (sum_i ā_i·ι(p_ij))_j``."""
    P = t.module
    cols = []
    for j in range(P.gens):
        cols.append(env_sum(env_mul(a, embed_A(p.coeffs[j])) for a, p in t.summands))
    return ModuleElement(smoothen(P), tuple(cols))


def bilinear_pair(abar: EnvelopeElement, a: AElement, p: ModuleElement) -> tuple[TensorElement, TensorElement]:
    """The two sides of ``ā⊗(a·p) = (ā·a)⊗p``."""
    return (
        TensorElement(p.module, ((abar, p.scale(a)),)),
        TensorElement(p.module, ((env_mul(abar, embed_A(a)), p),)),
    )


def tensor_equal(s: TensorElement, t: TensorElement, cfg: OracleConfig = OracleConfig()) -> Equality:
    return module_equal(tensor_normalize(s), tensor_normalize(t), cfg)


# -- localization -------------------------------------------------------------


class UndeterminedDenominator(ValueError):
    """Nonvanishing of a denominator on a region could not be certified."""


@dataclass(frozen=True)
class Region:
    """Open box, one rational interval per coordinate of M×N."""

    bounds: tuple[tuple[str, Fraction, Fraction], ...]

    def __post_init__(self):
        bs = []
        for name, lo, hi in self.bounds:
            lo, hi = Fraction(lo), Fraction(hi)
            if not lo < hi:
                raise ValueError(f"empty interval for {name}: ({lo}, {hi})")
            bs.append((name, lo, hi))
        object.__setattr__(self, "bounds", tuple(bs))

    @classmethod
    def of(cls, model: ProductModel, box: Mapping[str, tuple] | None = None, default=(-1, 1)) -> "Region":
        box = dict(box or {})
        unknown = set(box) - set(model.coordinates)
        if unknown:
            raise ValueError(f"unknown coordinates {sorted(unknown)}")
        return cls(tuple((n, *box.get(n, default)) for n in model.coordinates))

    def as_mapping(self) -> dict[str, tuple[Fraction, Fraction]]:
        return {n: (lo, hi) for n, lo, hi in self.bounds}


@dataclass(frozen=True)
class LocalFraction:
    """``num / den`` over a region; ``den`` is certified nonvanishing there."""

    num: object
    den: Scalar
    region: Region


class Localization:
    """Context for fractions over ``P`` with denominators nonvanishing on ``U``."""

    def __init__(self, P: FinPresModule, U: Region, cfg: OracleConfig = OracleConfig()):
        self.module = P
        self.region = U
        self.cfg = cfg.with_region(U.as_mapping())
        self._certified: dict[Expr, bool] = {}

    def certify(self, den: Scalar) -> Scalar:
        e = _flat(den)
        ok = self._certified.get(e)
        if ok is None:
            ok = certify_nonvanishing(e, self.region.as_mapping())
            self._certified[e] = ok
        if not ok:
            raise UndeterminedDenominator(f"cannot certify {e} nonvanishing on the region")
        return den

    def product(self, dens: Sequence[EnvelopeElement]) -> EnvelopeElement:
        """Product of certified denominators; certified because the set is multiplicative."""
        for d in dens:
            self.certify(d)
        total = dens[0]
        for d in dens[1:]:
            total = env_mul(total, d)
        self._certified[_flat(total)] = True
        return total

    def accepts(self, den: Scalar) -> bool:
        try:
            self.certify(den)
        except UndeterminedDenominator:
            return False
        return True

    def fraction(self, num, den: Scalar) -> LocalFraction:
        return LocalFraction(num, self.certify(den), self.region)

    # equality ---------------------------------------------------------------

    def fractions_equal(self, a: LocalFraction, b: LocalFraction) -> Equality:
        """Cross-multiplication: ``a.num·b.den == b.num·a.den``."""
        lhs = _scaled_vector(a.num, b.den)
        rhs = _scaled_vector(b.num, a.den)
        rels = self._relations_for(a.num)
        return vector_equal(lhs, rhs, rels, self.cfg)

    def tensors_equal(self, s: "LocalTensor", t: "LocalTensor") -> Equality:
        """Compare two elements of S̄⁻¹Ā ⊗ S⁻¹P after clearing all denominators."""
        s_num, s_den = s.common_fraction()
        t_num, t_den = t.common_fraction()
        lhs = [normalize(Mul((c, t_den))) for c in s_num]
        rhs = [normalize(Mul((c, s_den))) for c in t_num]
        return vector_equal(lhs, rhs, self._relations_for(None), self.cfg)

    def _relations_for(self, num) -> list[list[Expr]]:
        if isinstance(num, (AElement, EnvelopeElement)):
            return []
        return self.module.relation_flats()


def localize(P: FinPresModule, U: Region, cfg: OracleConfig = OracleConfig()) -> Localization:
    return Localization(P, U, cfg)


def _scaled_vector(num, den: Scalar) -> list[Expr]:
    d = _flat(den)
    if isinstance(num, (AElement, EnvelopeElement)):
        return [normalize(Mul((num.flat, d)))]
    if isinstance(num, TensorElement):
        num = tensor_normalize(num)
    return [normalize(Mul((c, d))) for c in num.flats()]


@dataclass(frozen=True)
class LocalTensor:
    """``sum (f_i/g_i) ⊗ (p_i/h_i)`` in (S̄⁻¹Ā) ⊗ (S⁻¹P)."""

    module: FinPresModule
    summands: tuple[tuple[LocalFraction, LocalFraction], ...]

    def common_fraction(self) -> tuple[list[Expr], Expr]:
        """Coefficients over the product of every summand's denominator ``g_i h_i``."""
        dens = [Mul((fs.den.flat, ps.den.flat)) for fs, ps in self.summands]
        out = []
        for j in range(self.module.gens):
            terms = []
            for i, (fs, ps) in enumerate(self.summands):
                others = [d for k, d in enumerate(dens) if k != i]
                terms.append(Mul((fs.num.flat, ps.num.coeffs[j].flat, *others)))
            out.append(normalize(Add(tuple(terms))))
        return out, normalize(Mul(tuple(dens))) if dens else Const(1)

    def coefficient_exprs(self) -> list[Expr]:
        """Per generator, ``sum_i f_i p_ij / (g_i h_i)`` as one normalized expression."""
        out = []
        for j in range(self.module.gens):
            terms = []
            for fs, ps in self.summands:
                c = ps.num.coeffs[j].flat
                terms.append(
                    Mul((fs.num.flat, c, reciprocal(fs.den.flat), reciprocal(ps.den.flat)))
                )
            out.append(normalize(sum(terms[1:], terms[0]) if terms else ZERO))
        return out


def lemma2_forward(fr: LocalFraction, loc: Localization) -> LocalTensor:
    """``(f⊗p)/g ↦ (f/g)⊗(p/1)``, extended additively over the summands of the numerator."""
    t: TensorElement = fr.num
    one = AElement.const(1)
    summands = tuple(
        (loc.fraction(f, fr.den), loc.fraction(p, one)) for f, p in t.summands
    )
    return LocalTensor(t.module, summands)


def lemma2_backward(s: LocalTensor, loc: Localization) -> LocalFraction:
    """``(f/g)⊗(p/h) ↦ (f⊗p)/(gh)``; several summands share the product denominator."""
    dens = [loc.product([fs.den, embed_A(ps.den)]) for fs, ps in s.summands]
    if len(dens) == 1:
        (fs, ps), = s.summands
        return loc.fraction(TensorElement(s.module, ((fs.num, ps.num),)), dens[0])
    summands = []
    for i, (fs, ps) in enumerate(s.summands):
        coeff = fs.num
        for k, d in enumerate(dens):
            if k != i:
                coeff = env_mul(coeff, d)
        summands.append((coeff, ps.num))
    return loc.fraction(TensorElement(s.module, tuple(summands)), loc.product(dens))


# -- smoothened tensor product -----------------------------------------------


def _require_groups(P: FinPresModule, group: str, label: str):
    bad = P.variable_groups() - {group}
    if bad:
        raise VariableGroupError(f"{label} relations must only use group {group}, found {sorted(bad)}")


def tensor_over_R(P: FinPresModule, Q: FinPresModule) -> FinPresModule:
    """P⊗_R Q as an A-module; generator ``(i, j)`` has index ``i*Q.gens + j``."""
    if P.tier != A_TIER or Q.tier != A_TIER:
        raise ValueError("tensor_over_R expects modules given over A")
    _require_groups(P, "X", "P")
    _require_groups(Q, "Y", "Q")
    p, q = P.gens, Q.gens
    zero = AElement()
    rels = []
    for r in P.relations:
        for j in range(q):
            row = [zero] * (p * q)
            for i in range(p):
                row[i * q + j] = r[i]
            rels.append(tuple(row))
    for s in Q.relations:
        for i in range(p):
            row = [zero] * (p * q)
            for j in range(q):
                row[i * q + j] = s[j]
            rels.append(tuple(row))
    return FinPresModule(A_TIER, p * q, tuple(rels))


def smoothened_tensor(P: FinPresModule, Q: FinPresModule) -> FinPresModule:
    """The C∞(M×N)-module obtained by smoothening P⊗_R Q."""
    return smoothen(tensor_over_R(P, Q))


def extend_from_N(Q: FinPresModule) -> FinPresModule:
    """C∞(M×N)⊗_{C∞(N)} Q: Q's relations, read in the envelope."""
    return extend_from_side(Q, "M")


@dataclass(frozen=True)
class IteratedTensor:
    """Element ``sum H_k ⊗ (f_k ⊗ q_k)`` of C∞(M×N) ⊗_A (C∞(M)⊗_R Q).

    ``side="M"``: ``f_k`` in the x-variables and ``Q`` over C∞(N).
    ``side="N"`` is the mirrored statement with the roles of x and y swapped.
    """

    Q: FinPresModule
    summands: tuple[tuple[EnvelopeElement, Expr, ModuleElement], ...]
    side: str = "M"

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))
        own, other = ("X", "Y") if self.side == "M" else ("Y", "X")
        _require_groups(self.Q, other, "Q")
        for H, f, q in self.summands:
            if groups(f) - {own}:
                raise VariableGroupError(f"{f} must only use group {own}")
            if q.module.gens != self.Q.gens:
                raise ValueError("summand lives in a different module")

    def scale(self, s: EnvelopeElement) -> "IteratedTensor":
        return IteratedTensor(self.Q, tuple((env_mul(s, H), f, q) for H, f, q in self.summands), self.side)


@dataclass(frozen=True)
class ExtendedTensor:
    """Element ``sum H_k ⊗ q_k`` of C∞(M×N) ⊗_{C∞(N)} Q (or the mirror)."""

    Q: FinPresModule
    summands: tuple[tuple[EnvelopeElement, ModuleElement], ...]
    side: str = "M"

    def __post_init__(self):
        object.__setattr__(self, "summands", tuple(self.summands))

    def scale(self, s: EnvelopeElement) -> "ExtendedTensor":
        return ExtendedTensor(self.Q, tuple((env_mul(s, H), q) for H, q in self.summands), self.side)


def _f_as_A(f: Expr, side: str) -> AElement:
    return AElement.x(f) if side == "M" else AElement.y(f)


def _swap_module(P: FinPresModule) -> FinPresModule:
    swap = swap_A if P.tier == A_TIER else swap_env
    return FinPresModule(P.tier, P.gens, tuple(tuple(swap(s) for s in r) for r in P.relations))


def _swap_elem(u: ModuleElement, module: FinPresModule) -> ModuleElement:
    swap = swap_A if module.tier == A_TIER else swap_env
    return ModuleElement(module, tuple(swap(c) for c in u.coeffs))


def _swap_left(t: IteratedTensor) -> IteratedTensor:
    Q = _swap_module(t.Q)
    side = "N" if t.side == "M" else "M"
    return IteratedTensor(Q, tuple((swap_env(H), swap_expr(f), _swap_elem(q, Q)) for H, f, q in t.summands), side)


def _swap_right(t: ExtendedTensor) -> ExtendedTensor:
    Q = _swap_module(t.Q)
    side = "N" if t.side == "M" else "M"
    return ExtendedTensor(Q, tuple((swap_env(H), _swap_elem(q, Q)) for H, q in t.summands), side)


def prop3_forward(t: IteratedTensor) -> ExtendedTensor:
    """``H⊗(f⊗q) ↦ (H·f)⊗q``, extended additively.

    The mirrored side is handled by swapping x and y, applying the same
    assignment, and swapping back.
    """
    if t.side == "N":
        return _swap_right(prop3_forward(_swap_left(t)))
    return ExtendedTensor(
        t.Q, tuple((env_mul(H, embed_A(AElement.x(f))), q) for H, f, q in t.summands), "M"
    )


def prop3_backward(t: ExtendedTensor) -> IteratedTensor:
    """``H⊗q ↦ H⊗(1⊗q)``."""
    if t.side == "N":
        return _swap_left(prop3_backward(_swap_right(t)))
    return IteratedTensor(t.Q, tuple((H, ONE, q) for H, q in t.summands), "M")


def prop3_left_coefficients(t: IteratedTensor) -> ModuleElement:
    """Normal form in the envelope module: ``sum_k H_k·ι(f_k ⊗ q_kj)`` per generator."""
    target = extend_from_side(t.Q, t.side)
    cols = []
    for j in range(t.Q.gens):
        cols.append(
            env_sum(env_mul(H, embed_A(_f_as_A(f, t.side) * q.coeffs[j])) for H, f, q in t.summands)
        )
    return ModuleElement(target, tuple(cols))


def prop3_right_coefficients(t: ExtendedTensor) -> ModuleElement:
    target = extend_from_side(t.Q, t.side)
    cols = []
    for j in range(t.Q.gens):
        cols.append(env_sum(env_mul(H, embed_A(q.coeffs[j])) for H, q in t.summands))
    return ModuleElement(target, tuple(cols))


def extend_from_side(Q: FinPresModule, side: str) -> FinPresModule:
    _require_groups(Q, "Y" if side == "M" else "X", "Q")
    return smoothen(Q)


def prop3_left_equal(s: IteratedTensor, t: IteratedTensor, cfg: OracleConfig = OracleConfig()) -> Equality:
    return module_equal(prop3_left_coefficients(s), prop3_left_coefficients(t), cfg)


def prop3_right_equal(s: ExtendedTensor, t: ExtendedTensor, cfg: OracleConfig = OracleConfig()) -> Equality:
    return module_equal(prop3_right_coefficients(s), prop3_right_coefficients(t), cfg)
