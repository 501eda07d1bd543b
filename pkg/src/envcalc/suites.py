"""Property suites: every identity checked symbolically and against numbers.

Each suite is a list of seeded cases.  A case collects checks; its verdict
is ``fail`` if any check fails, else ``undetermined`` if the equality
oracle could not decide some identity, else ``pass``.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .calculus import (
    DerivationA,
    OneFormA,
    apply_derivation_A,
    apply_derivation_env,
    coordinate_differentials,
    d_A,
    d_env,
    differential_preimage,
    embed_form,
    forms_equal,
    gradient_rows,
    nabla,
    outer_partial,
    phi,
    phi_inverse,
    point_cotangent_rank,
    restrict_Pi,
    smoothened_equal,
    smoothened_normalize,
    SmoothenedOneForm,
)
from .envelope import (
    AElement,
    EnvelopeElement,
    ProductModel,
    coordinate_envelope,
    embed_A,
    env_add,
    env_mul,
    env_scalar_mul,
    one_env,
    zero_env,
)
from .generators import (
    rand_A,
    rand_denominator_expr,
    rand_derivation,
    rand_env,
    rand_expr,
    rand_module,
    rand_module_element,
    rand_one_form_env,
    rand_region,
    rand_small_env,
    rand_smoothened,
    rerepresent,
)
from .modules import (
    FinPresModule,
    IteratedTensor,
    ExtendedTensor,
    TensorElement,
    base_change,
    bilinear_pair,
    extend_from_side,
    lemma2_backward,
    lemma2_forward,
    localize,
    module_equal,
    pointwise_rank,
    prop3_backward,
    prop3_forward,
    prop3_left_coefficients,
    prop3_left_equal,
    prop3_right_coefficients,
    prop3_right_equal,
    smoothen,
    smoothened_tensor,
    tensor_equal,
    tensor_normalize,
    vector_equal,
)
from .oracle import (
    FD_STEP,
    Equality,
    NonFiniteSample,
    OracleConfig,
    SampleStream,
    SplitMix64,
    Verdict,
    case_rng,
    central_fd,
    directional_fd,
    equal,
    finite_points,
    rank_at,
    tier_tolerance,
)
from .parser import parse_expr
from .symbolic import (
    Add,
    Call,
    Const,
    Pow,
    Expr,
    Mul,
    compile_expr,
    is_polynomial,
    normalize,
    partial,
    substitute,
    to_string,
)

PASS, FAIL, UNDETERMINED = "pass", "fail", "undetermined"
EXACT_TOL = 1e-6  # symbolic-vs-symbolic numeric residual
FD_POINTS = 50


@dataclass(frozen=True)
class Session:
    """What a suite run needs: the product model and oracle parameters."""

    model: ProductModel = ProductModel()
    oracle: OracleConfig = OracleConfig()
    declarations: dict = field(default_factory=dict, compare=False)


@dataclass
class Case:
    id: str
    verdict: str = PASS
    residual: float = 0.0
    detail: str = ""
    runtime: float = 0.0
    _notes: list = field(default_factory=list, repr=False)

    # -- check helpers --------------------------------------------------------

    def _fail(self, msg: str):
        if self.verdict != FAIL:
            self.detail = msg
        self.verdict = FAIL

    def require(self, label: str, ok: bool):
        if not ok:
            self._fail(f"{label}: violated")

    def equality(self, label: str, eq: Equality):
        if eq.verdict is Verdict.NOT_EQUAL:
            w = {k: str(v) for k, v in (eq.witness or {}).items()}
            self._fail(f"{label}: not equal (residual {eq.residual:.3g} at {w})")
        elif eq.verdict is Verdict.UNDETERMINED:
            if self.verdict == PASS:
                self.verdict = UNDETERMINED
            self._notes.append(f"{label}: undetermined after {eq.samples} samples")

    def bound(self, label: str, value: float, tol: float):
        if not math.isfinite(value):
            self._fail(f"{label}: non-finite residual")
            return
        self.residual = max(self.residual, value)
        if value > tol:
            self._fail(f"{label}: residual {value:.3g} > {tol:g}")

    def note(self, text: str):
        self._notes.append(text)

    def finish(self):
        if not self.detail:
            self.detail = "; ".join(self._notes)

    def as_dict(self, timing: bool = False) -> dict:
        d = {"id": self.id, "verdict": self.verdict, "residual": self.residual, "detail": self.detail}
        if timing:
            d["runtime"] = round(self.runtime, 6)
        return d


@dataclass
class Report:
    suite: str
    model: ProductModel
    seed: int
    cases: list[Case] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        out = {"pass": 0, "fail": 0, "undetermined": 0}
        for c in self.cases:
            out[c.verdict] += 1
        return out

    @property
    def ok(self) -> bool:
        return self.summary["fail"] == 0

    @property
    def worst_residual(self) -> float:
        return max((c.residual for c in self.cases), default=0.0)

    @property
    def runtime(self) -> float:
        return sum(c.runtime for c in self.cases)

    def as_dict(self, timing: bool = False) -> dict:
        d = {
            "suite": self.suite,
            "model": {"m": self.model.m, "n": self.model.n},
            "seed": self.seed,
            "cases": [c.as_dict(timing) for c in self.cases],
            "summary": self.summary,
        }
        if self.notes:
            d["notes"] = list(self.notes)
        if timing:
            d["runtime"] = round(self.runtime, 6)
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.as_dict(timing), indent=2)

    def to_text(self, verbose: bool = False) -> str:
        s = self.summary
        head = (
            f"suite {self.suite}: model m={self.model.m} n={self.model.n} seed={self.seed} "
            f"cases={len(self.cases)} pass={s['pass']} fail={s['fail']} "
            f"undetermined={s['undetermined']} worst_residual={self.worst_residual:.3e} "
            f"runtime={self.runtime:.2f}s"
        )
        lines = [head]
        lines += [f"  note: {n}" for n in self.notes]
        for c in self.cases:
            if verbose or c.verdict != PASS:
                lines.append(f"  [{c.verdict}] {c.id} residual={c.residual:.3e} {c.detail}")
        return "\n".join(lines)


SuiteFn = Callable[[Session, Report], None]
SUITES: dict[str, SuiteFn] = {}


def suite(name: str):
    def deco(fn: SuiteFn) -> SuiteFn:
        SUITES[name] = fn
        return fn

    return deco


class UnknownSuite(KeyError):
    def __str__(self):
        return f"unknown suite {self.args[0]!r} (known: {', '.join(SUITES)})"


def run_suite(name: str, session: Session = Session()) -> Report:
    """Run one registered suite and return its report."""
    if name not in SUITES:
        raise UnknownSuite(name)
    report = Report(name, session.model, session.oracle.seed)
    SUITES[name](session, report)
    return report


def run_cases(report: Report, session: Session, prefix: str, count: int, body):
    for i in range(count):
        rng = case_rng(session.oracle.seed, f"{report.suite}/{prefix}", i)
        case = Case(f"{prefix}-{i:03d}")
        t0 = time.perf_counter()
        try:
            body(rng, case)
        except NonFiniteSample as exc:
            case._fail(f"non-finite sample: {exc}")
        case.runtime = time.perf_counter() - t0
        case.finish()
        report.cases.append(case)


# -- numeric helpers ------------------------------------------------------------


def _sample_stream(session: Session, salt: int, names) -> SampleStream:
    seed = SplitMix64(session.oracle.seed).fork(salt).next()
    return SampleStream(seed, session.oracle.domain(names), FD_POINTS)


def numeric_residual(session: Session, a: Expr, b: Expr, count: int = 20, salt: int = 1) -> float:
    """Worst relative residual between two expressions at seeded finite points."""
    fa, fb = compile_expr(a), compile_expr(b)
    names = set(session.model.coordinates) | a.free_vars | b.free_vars
    worst = 0.0
    for p in finite_points([fa, fb], _sample_stream(session, salt, names), count):
        worst = max(worst, abs(fa(p) - fb(p)) / (1.0 + abs(fb(p))))
    return worst


# -- sym-core -----------------------------------------------------------------------


@suite("symbolic")
def _symbolic(session: Session, report: Report):
    model = session.model
    names = model.coordinates
    cfg = session.oracle

    def body(rng: SplitMix64, case: Case):
        e1 = rand_expr(rng, names, 3)
        e2 = rand_expr(rng, names, 2)
        u, v = rng.choice(names), rng.choice(names)
        n1 = normalize(e1)
        case.require("normalize idempotent", normalize(n1) == n1)
        case.equality("schwarz", equal(partial(partial(e1, u), v), partial(partial(e1, v), u), cfg))
        lhs = partial(Mul((e1, e2)), u)
        rhs = Add((Mul((partial(e1, u), e2)), Mul((e1, partial(e2, u)))))
        case.equality("leibniz", equal(lhs, rhs, cfg))
        case.equality("linearity", equal(partial(Add((e1, e2)), u), Add((partial(e1, u), partial(e2, u))), cfg))
        reparsed = normalize(parse_expr(to_string(n1)))
        case.require("print/parse round trip", reparsed == n1)

    run_cases(report, session, "expr", 200, body)


@suite("finite-difference")
def _finite_difference(session: Session, report: Report):
    """central_fd agrees with the symbolic partial on seeded (expression, point) pairs."""
    model = session.model
    names = model.coordinates

    def body(rng: SplitMix64, case: Case):
        poly = rng.chance(1, 2)
        e = normalize(rand_expr(rng, names, 3, poly=poly))
        tol = tier_tolerance(e)
        case.note("tier=" + ("polynomial" if is_polynomial(e) else "transcendental"))
        stream = _sample_stream(session, rng.next(), names)
        got = 0
        for p in finite_points([e], stream, 10, margin=2 * FD_STEP):
            for v in names:
                sym = compile_expr(partial(e, v))(p)
                fd = central_fd(e, v, p)
                case.bound(f"d/d{v}", abs(sym - fd) / (1 + abs(fd)), tol)
            got += 1
        case.require("found finite points", got > 0)

    # 100 expressions x 10 points x (m+n) directions
    run_cases(report, session, "pair", 100, body)


# -- envelope algebra laws ----------------------------------------------------------------


@suite("algebra-laws")
def _algebra_laws(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def body(rng: SplitMix64, case: Case):
        a, b, c = (rand_small_env(rng, model) for _ in range(3))
        r = Fraction(rng.between(-5, 5), rng.between(1, 4))
        F = lambda e: e.flat  # noqa: E731
        eq = lambda label, x, y: case.equality(label, equal(x, y, cfg))  # noqa: E731
        eq("add is flat sum", F(env_add(a, b)), Add((F(a), F(b))))
        eq("mul is flat product", F(env_mul(a, b)), Mul((F(a), F(b))))
        eq("scalar is flat scaling", F(env_scalar_mul(r, a)), normalize(Mul((_const(r), F(a)))))
        eq("add commutative", F(env_add(a, b)), F(env_add(b, a)))
        eq("mul commutative", F(env_mul(a, b)), F(env_mul(b, a)))
        eq("add associative", F(env_add(env_add(a, b), c)), F(env_add(a, env_add(b, c))))
        eq("mul associative", F(env_mul(env_mul(a, b), c)), F(env_mul(a, env_mul(b, c))))
        eq("distributive", F(env_mul(a, env_add(b, c))), F(env_add(env_mul(a, b), env_mul(a, c))))
        eq("additive unit", F(env_add(a, zero_env())), F(a))
        eq("multiplicative unit", F(env_mul(a, one_env())), F(a))
        eq("zero scalar", F(env_scalar_mul(0, a)), _const(0))
        eq("unit scalar", F(env_scalar_mul(1, a)), F(a))
        p, q = rand_A(rng, model), rand_A(rng, model)
        eq("embed multiplicative", F(embed_A(p * q)), F(env_mul(embed_A(p), embed_A(q))))
        eq("embed additive", F(embed_A(p + q)), F(env_add(embed_A(p), embed_A(q))))
        prod = p * q
        case.require("A product stays separable", len(prod.terms) == len(p.terms) * len(q.terms))
        case.bound("numeric mul", numeric_residual(session, F(env_mul(a, b)), Mul((F(a), F(b))), 10, rng.next()), EXACT_TOL)

    run_cases(report, session, "triple", 200, body)


def _const(r) -> Expr:
    return Const(Fraction(r))


# -- chain rule ------------------------------------------------------------------------


@suite("chain-rule")
def _chain_rule(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def body(rng: SplitMix64, case: Case):
        e = rand_env(rng, model, poly=rng.chance(1, 2), tame=True)
        tol = tier_tolerance(e.flat)
        case.note("tier=" + ("polynomial" if is_polynomial(e.flat) else "transcendental"))
        dw = d_env(model, e)
        sub = {f"t{i}": a.flat for i, a in enumerate(e.args, 1)}
        dA = [d_A(model, a) for a in e.args]
        for b, z in enumerate(model.coordinates):
            coef = dw.coeffs[b].flat
            case.equality(f"d{z}: composite", equal(coef, partial(e.flat, z), cfg))
            formula = Add(
                tuple(
                    Mul((substitute(partial(e.H, f"t{i}"), sub), dA[i - 1].coeffs[b].flat))
                    for i in range(1, e.arity + 1)
                )
            )
            case.equality(f"d{z}: formula", equal(coef, formula, cfg))
        fns = [compile_expr(c) for c in dw.flats()]
        stream = _sample_stream(session, rng.next(), model.coordinates)
        used = 0
        for p in finite_points([e.flat] + dw.flats(), stream, FD_POINTS, margin=2 * FD_STEP):
            used += 1
            for b, z in enumerate(model.coordinates):
                fd = central_fd(e.flat, z, p)
                case.bound(f"d{z} vs finite difference", abs(fns[b](p) - fd) / (1 + abs(fd)), tol)
        case.require(f"{FD_POINTS} finite sample points", used == FD_POINTS)

    run_cases(report, session, "env", 200, body)


# -- φ is bijective -----------------------------------------------------------------------


@suite("theorem4")
def _theorem4(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def forms(rng: SplitMix64, case: Case):
        w = rand_one_form_env(rng, model)
        back = phi(phi_inverse(w))
        case.equality("phi(phi_inverse(w)) == w", forms_equal(back, w, cfg))
        for a, b in zip(back.flats(), w.flats()):
            case.bound("numeric", numeric_residual(session, a, b, 10, rng.next()), EXACT_TOL)

    def smoothened(rng: SplitMix64, case: Case):
        s = rand_smoothened(rng, model)
        back = phi_inverse(phi(s))
        case.equality("phi_inverse(phi(s)) == s", smoothened_equal(back, s, cfg))
        # injectivity: s - phi_inverse(phi(s)) maps to 0, so it must normalize to 0
        k = SmoothenedOneForm(model, s.summands + tuple((-c, w) for c, w in back.summands))
        image = phi(k)
        zero = [Const(0)] * model.dim
        if vector_equal(image.flats(), zero, (), cfg).verdict is not Verdict.NOT_EQUAL:
            case.equality("kernel element normalizes to 0", vector_equal(smoothened_normalize(k).flats(), zero, (), cfg))
        else:
            case._fail("phi(s - phi_inverse(phi(s))) is not zero")

    def surjective(rng: SplitMix64, case: Case):
        e = rand_env(rng, model)
        pre = differential_preimage(model, e)
        case.equality("phi(sum dH/dt_i ⊗ da_i) == d(H∘a)", forms_equal(phi(pre), d_env(model, e), cfg))
        case.equality("preimage agrees with phi_inverse", smoothened_equal(pre, phi_inverse(d_env(model, e)), cfg))

    def fibers(rng: SplitMix64, case: Case):
        basis = [SmoothenedOneForm(model, ((one_env(), dz),)) for dz in coordinate_differentials(model)]
        images = [phi(b) for b in basis]
        stream = _sample_stream(session, rng.next(), model.coordinates)
        for p in stream.points(5):
            rows = [[compile_expr(c)(p) for c in im.flats()] for im in images]
            src = [[compile_expr(c)(p) for c in smoothened_normalize(b).flats()] for b in basis]
            case.require("phi preserves fiber rank", rank_at(rows) == rank_at(src) == model.dim)

    run_cases(report, session, "form", 200, forms)
    run_cases(report, session, "smoothened", 200, smoothened)
    run_cases(report, session, "surjective", 50, surjective)
    run_cases(report, session, "fiber", 20, fibers)


# -- canonical connection -----------------------------------------------------------------


@suite("connection")
def _connection(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def body(rng: SplitMix64, case: Case):
        X = rand_derivation(rng, model)
        NX = nabla(X)
        case.require("restrict_Pi(nabla(X)) == X", restrict_Pi(NX) == X)
        e, f = rand_small_env(rng, model), rand_small_env(rng, model)
        lhs = apply_derivation_env(NX, env_mul(e, f))
        rhs = env_add(env_mul(apply_derivation_env(NX, e), f), env_mul(e, apply_derivation_env(NX, f)))
        case.equality("Leibniz on envelope", equal(lhs.flat, rhs.flat, cfg))
        case.bound("Leibniz numeric", numeric_residual(session, lhs.flat, rhs.flat, 20, rng.next()), EXACT_TOL)

        e2 = rerepresent(rng, e, model)
        case.require("representations differ", e2 != e)
        v1, v2 = apply_derivation_env(NX, e), apply_derivation_env(NX, e2)
        case.equality("well-defined", equal(v1.flat, v2.flat, cfg))
        case.bound("well-defined numeric", numeric_residual(session, v1.flat, v2.flat, 20, rng.next()), EXACT_TOL)
        case.equality("d well-defined", forms_equal(d_env(model, e), d_env(model, e2), cfg))

        a, a2 = rand_A(rng, model), rand_A(rng, model)
        XA = apply_derivation_A(X, a * a2)
        XB = env_add(env_mul(apply_derivation_A(X, a), embed_A(a2)), env_mul(embed_A(a), apply_derivation_A(X, a2)))
        case.equality("Leibniz on A", equal(XA.flat, XB.flat, cfg))
        case.equality(
            "Pi agrees on A",
            equal(apply_derivation_A(X, a).flat, apply_derivation_env(NX, embed_A(a)).flat, cfg),
        )
        case.equality(
            "lift is A-linear",
            equal(apply_derivation_env(nabla(X.scale(a)), e).flat, env_mul(embed_A(a), v1).flat, cfg),
        )
        case.equality(
            "d commutes with embedding",
            forms_equal(d_env(model, embed_A(a)), embed_form(d_A(model, a)), cfg),
        )

        direction = {z: X.values[b].flat for b, z in enumerate(model.coordinates)}
        tol = max(tier_tolerance(e.flat), *(tier_tolerance(v) for v in direction.values()))
        fv = compile_expr(v1.flat)
        stream = _sample_stream(session, rng.next(), model.coordinates)
        for p in finite_points([e.flat, v1.flat, *direction.values()], stream, 20, margin=2 * FD_STEP):
            fd = directional_fd(e.flat, direction, p)
            case.bound("lift vs directional finite difference", abs(fv(p) - fd) / (1 + abs(fd)), tol)

    run_cases(report, session, "derivation", 200, body)


# -- smoothening and the smoothened tensor product -------------------------------------


@suite("smoothening")
def _smoothening(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def bilinear(rng: SplitMix64, case: Case):
        P = rand_module(rng, model, "XY")
        abar = rand_small_env(rng, model)
        a = rand_A(rng, model, terms=1)
        p = rand_module_element(rng, model, P)
        lhs, rhs = bilinear_pair(abar, a, p)
        case.equality("a⊗(a'p) == (a a')⊗p", tensor_equal(lhs, rhs, cfg))
        extra = (rand_small_env(rng, model), rand_module_element(rng, model, P))
        both = TensorElement(P, lhs.summands + (extra,))
        other = TensorElement(P, rhs.summands + (extra,))
        case.equality("rewrite inside a sum", tensor_equal(both, other, cfg))
        case.equality(
            "1⊗p is the base change of p",
            module_equal(tensor_normalize(TensorElement(P, ((one_env(), p),))), base_change(p), cfg),
        )
        zero = tensor_normalize(TensorElement(P, ((zero_env(), p),)))
        case.equality("0⊗p == 0", vector_equal(zero.flats(), [Const(0)] * P.gens, (), cfg))
        Pbar = smoothen(P)
        case.require("smoothen keeps generators", Pbar.gens == P.gens)
        for r, rbar in zip(P.relations, Pbar.relations):
            for s_, sbar in zip(r, rbar):
                case.require("relations embedded entrywise", sbar == embed_A(s_))

    def tensor_rank(rng: SplitMix64, case: Case):
        p, q = rng.between(1, 3), rng.between(1, 3)
        T = smoothened_tensor(FinPresModule.free(p), FinPresModule.free(q))
        case.require("free tensor is free", T.gens == p * q and not T.relations)
        P = rand_module(rng, model, "X")
        Q = rand_module(rng, model, "Y")
        PQ = smoothened_tensor(P, Q)
        stream = _sample_stream(session, rng.next(), model.coordinates)
        for pt in stream.points(20):
            case.require("rank of free tensor is the product", pointwise_rank(T, pt) == p * q)
            rP, rQ, rPQ = pointwise_rank(P, pt), pointwise_rank(Q, pt), pointwise_rank(PQ, pt)
            case.require("fiber of P⊗Q is the product of fibers", rPQ == rP * rQ)

    run_cases(report, session, "bilinear", 100, bilinear)
    run_cases(report, session, "tensor-rank", 20, tensor_rank)


# -- localization and local dimension -----------------------------------------------------


def _certified_denominator(rng: SplitMix64, model, region, loc, case: Case, tries: int = 25):
    for k in range(tries):
        g = coordinate_envelope(model, rand_denominator_expr(rng, model, region))
        if loc.accepts(g):
            if k:
                case.note(f"{k} denominators refused before certification")
            return g
    raise AssertionError("no certifiable denominator found")


def _A_denominator(rng: SplitMix64, model) -> AElement:
    fx = Add((Const(1), Pow(rand_expr(rng, model.x_names, 1, poly=True), 2)))
    gy = Add((Const(2), Call("cos", rand_expr(rng, model.y_names, 1, poly=True))))
    return AElement(((fx, gy),))


@suite("lemma2")
def _lemma2(session: Session, report: Report):
    model = session.model

    def fractions(rng: SplitMix64, case: Case):
        U = rand_region(rng, model)
        P = rand_module(rng, model, "XY")
        loc = localize(P, U, session.oracle)
        g = _certified_denominator(rng, model, U, loc, case)
        T = TensorElement(
            P,
            tuple(
                (rand_small_env(rng, model), rand_module_element(rng, model, P))
                for _ in range(rng.between(1, 2))
            ),
        )
        fr = loc.fraction(T, g)
        there = lemma2_forward(fr, loc)
        case.equality("backward(forward(fr)) == fr", loc.fractions_equal(lemma2_backward(there, loc), fr))

        h = loc.certify(_A_denominator(rng, model))
        s = type(there)(
            P,
            (
                (
                    loc.fraction(rand_small_env(rng, model), g),
                    loc.fraction(rand_module_element(rng, model, P), h),
                ),
            ),
        )
        back = lemma2_backward(s, loc)
        case.equality("forward(backward(s)) == s", loc.tensors_equal(lemma2_forward(back, loc), s))

    def ranks(rng: SplitMix64, case: Case, free: bool = True):
        P = rand_module(rng, model, "XY", relations=0 if free else 1)
        Pbar = smoothen(P)
        U = rand_region(rng, model)
        stream = SampleStream(rng.next(), U.as_mapping(), 20)
        seen = set()
        for p in stream:
            r, rbar = pointwise_rank(P, p), pointwise_rank(Pbar, p)
            seen.add(r)
            case.require("local dimension preserved", r == rbar)
            if free:
                case.require("free module has constant rank", r == P.gens)
        case.note(f"gens={P.gens} relations={len(P.relations)} ranks={sorted(seen)}")

    run_cases(report, session, "fraction", 50, fractions)
    run_cases(report, session, "rank", 20, ranks)
    run_cases(report, session, "presented", 10, lambda rng, case: ranks(rng, case, free=False))


# -- extension of scalars from one factor -------------------------------------------------


@suite("prop3")
def _prop3(session: Session, report: Report):
    model = session.model
    cfg = session.oracle

    def make(side: str):
        own, other = ("X", "Y") if side == "M" else ("Y", "X")
        own_names = model.x_names if own == "X" else model.y_names

        def body(rng: SplitMix64, case: Case):
            Q = rand_module(rng, model, other)
            left = IteratedTensor(
                Q,
                tuple(
                    (
                        rand_small_env(rng, model),
                        normalize(rand_expr(rng, own_names, 1)),
                        rand_module_element(rng, model, Q, other),
                    )
                    for _ in range(rng.between(1, 3))
                ),
                side,
            )
            right = prop3_forward(left)
            case.equality("backward(forward(t)) == t", prop3_left_equal(prop3_backward(right), left, cfg))
            case.equality(
                "forward preserves coefficients",
                module_equal(prop3_right_coefficients(right), prop3_left_coefficients(left), cfg),
            )
            r = ExtendedTensor(
                Q,
                tuple(
                    (rand_small_env(rng, model), rand_module_element(rng, model, Q, other))
                    for _ in range(rng.between(1, 2))
                ),
                side,
            )
            case.equality("forward(backward(t)) == t", prop3_right_equal(prop3_forward(prop3_backward(r)), r, cfg))
            s = rand_small_env(rng, model)
            case.equality(
                "forward is envelope-linear",
                prop3_right_equal(prop3_forward(left.scale(s)), prop3_forward(left).scale(s), cfg),
            )
            # the module itself: C∞(M)⊗̄Q has Q's presentation over the envelope
            if side == "M":
                lhs = smoothened_tensor(FinPresModule.free(1), Q)
            else:
                lhs = smoothened_tensor(Q, FinPresModule.free(1))
            rhs = extend_from_side(Q, side)
            case.require("same generator count", lhs.gens == rhs.gens)
            case.require("same relation count", len(lhs.relations) == len(rhs.relations))
            for r1, r2 in zip(lhs.relation_flats(), rhs.relation_flats()):
                for a, b in zip(r1, r2):
                    case.equality("relation entries agree", equal(a, b, cfg))

        return body

    run_cases(report, session, "first", 50, make("M"))
    run_cases(report, session, "mirror", 50, make("N"))


# -- rank report ---------------------------------------------------------------------


@suite("rank-report")
def _rank_report(session: Session, report: Report):
    model = session.model
    m, n = model.m, model.n
    coords = [embed_A(model.coordinate(i)) for i in range(model.dim)]
    basis = [SmoothenedOneForm(model, ((one_env(), dz),)) for dz in coordinate_differentials(model)]
    measured: set[int] = set()

    def body(rng: SplitMix64, case: Case):
        p = next(SampleStream(rng.next(), session.oracle.domain(model.coordinates), 1).points())
        r = point_cotangent_rank(model, coords, p)
        measured.add(r)
        case.require("coordinate family has rank m+n", r == m + n)
        fam = [rand_small_env(rng, model) for _ in range(rng.between(1, 6))]
        try:
            rf = point_cotangent_rank(model, fam, p)
            case.require("rank never exceeds m+n", rf <= m + n)
        except ArithmeticError as exc:
            case.note(f"random family skipped: {exc}")
            rf = None
        fiber = rank_at([[compile_expr(c)(p) for c in phi(b).flats()] for b in basis])
        case.require("fiber of smoothened 1-forms has rank m+n", fiber == m + n)
        case.note(f"measured={r} fiber={fiber} family_rank={rf}")

    run_cases(report, session, "point", 100, body)
    stable = Case("stability")
    stable.require("measured rank constant over points", len(measured) == 1)
    stable.require("measured rank <= m+n", all(r <= m + n for r in measured))
    value = sorted(measured)[0] if measured else None
    stable.detail = (
        f"measured fiber dimension {value}; stated dim(M)*dim(N) = {m * n}; "
        f"dim(M)+dim(N) = {m + n}"
    )
    report.cases.append(stable)
    flag = "values coincide for this model" if m * n == m + n else "values differ"
    report.notes.append(
        f"stated fiber dimension dim(M)*dim(N) = {m * n}, measured = {value} "
        f"(dim(M)+dim(N) = {m + n}); documented ambiguity in the stated product formula, {flag}"
    )
