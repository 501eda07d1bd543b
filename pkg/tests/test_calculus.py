from fractions import Fraction

import pytest
from hypothesis import given

from envcalc.calculus import (
    DerivationA,
    DerivationEnv,
    NonFiniteFamily,
    OneFormA,
    OneFormEnv,
    SmoothenedOneForm,
    apply_derivation_A,
    apply_derivation_env,
    coordinate_differentials,
    d_A,
    d_env,
    differential_preimage,
    embed_form,
    forms_equal,
    nabla,
    phi,
    phi_inverse,
    point_as_mapping,
    point_cotangent_rank,
    restrict_Pi,
    smoothened_equal,
    smoothened_normalize,
)
from envcalc.envelope import AElement, EnvelopeElement, ProductModel, embed_A, env_add, env_mul, one_env, zero_env
from envcalc.generators import rand_A, rand_small_env, rerepresent
from envcalc.oracle import FD_STEP, SampleStream, Verdict, directional_fd, equal, finite_points, tier_tolerance
from envcalc.parser import parse_expr as P
from envcalc.symbolic import Const, compile_expr, normalize
from strategies import MODEL, a_elements, derivations, env_forms, envs, rngs, small_envs, smoothened_forms

X1, X2, Y1 = AElement.x(P("x1")), AElement.x(P("x2")), AElement.y(P("y1"))
XY = AElement(((P("x1"), P("y1")),))
EXY = EnvelopeElement(P("exp(t1)"), (XY,))


def N(text):
    return normalize(P(text))


def flats(w):
    return [normalize(c) for c in w.flats()] if isinstance(w, OneFormEnv) else [c.flat for c in w.coeffs]


def ok(eq):
    return eq.verdict is Verdict.EQUAL


# -- d on A and on the envelope --------------------------------------------------


def test_d_A_examples():
    assert flats(d_A(MODEL, X1)) == [Const(1), Const(0), Const(0), Const(0)]
    assert flats(d_A(MODEL, XY)) == [N("y1"), Const(0), N("x1"), Const(0)]
    assert flats(d_A(MODEL, AElement.const(5))) == [Const(0)] * 4


def test_d_env_examples():
    assert flats(d_env(MODEL, embed_A(X1))) == [Const(1), Const(0), Const(0), Const(0)]
    w = d_env(MODEL, EXY)
    assert flats(w) == [N("exp(x1*y1)*y1"), Const(0), N("exp(x1*y1)*x1"), Const(0)]
    lin = EnvelopeElement(P("t1 + t2"), (X1, Y1))
    assert flats(d_env(MODEL, lin)) == [Const(1), Const(0), Const(1), Const(0)]


def test_d_env_matches_finite_difference_gradient():
    w = d_env(MODEL, EXY)
    fns = [compile_expr(c) for c in w.flats()]
    stream = SampleStream(42, {n: (-1, 1) for n in MODEL.coordinates}, 50)
    from envcalc.oracle import central_fd

    for p in stream:
        for b, z in enumerate(MODEL.coordinates):
            fd = central_fd(EXY.flat, z, p)
            assert abs(fns[b](p) - fd) <= 1e-5 * (1 + abs(fd))


# -- φ and its inverse --------------------------------------------------------------


def test_phi_examples():
    dx1 = d_A(MODEL, X1)
    assert flats(phi(SmoothenedOneForm(MODEL, ((one_env(), dx1),)))) == flats(embed_form(dx1))
    w = phi(SmoothenedOneForm(MODEL, ((EXY, d_A(MODEL, XY)),)))
    assert flats(w) == [N("exp(x1*y1)*y1"), Const(0), N("exp(x1*y1)*x1"), Const(0)]
    zero = phi(SmoothenedOneForm(MODEL, ((EXY, OneFormA.zero(MODEL)),)))
    assert flats(zero) == [Const(0)] * 4


def test_phi_inverse_of_basis_form():
    dx1 = embed_form(d_A(MODEL, X1))
    (s,) = phi_inverse(dx1).summands
    assert s[0].flat == Const(1) and s[1] == coordinate_differentials(MODEL)[0]


def test_phi_inverse_of_a_differential_factors_through_dA():
    e = EnvelopeElement(P("sin(t1)"), (XY,))
    expected = SmoothenedOneForm(MODEL, ((EnvelopeElement(P("cos(t1)"), (XY,)), d_A(MODEL, XY)),))
    assert ok(smoothened_equal(phi_inverse(d_env(MODEL, e)), expected))
    assert ok(smoothened_equal(differential_preimage(MODEL, e), expected))


def test_smoothened_forms_are_not_collapsed():
    s = SmoothenedOneForm(MODEL, ((EXY, d_A(MODEL, XY)),))
    t = phi_inverse(phi(s))
    assert s.summands != t.summands
    assert ok(smoothened_equal(s, t))


@given(env_forms)
def test_phi_after_phi_inverse_is_identity(w):
    assert ok(forms_equal(phi(phi_inverse(w)), w))


@given(smoothened_forms)
def test_phi_inverse_after_phi_is_identity(s):
    assert ok(smoothened_equal(phi_inverse(phi(s)), s))


@given(smoothened_forms, smoothened_forms)
def test_phi_is_additive(s, t):
    assert ok(forms_equal(phi(s + t), phi(s) + phi(t)))


@given(envs)
def test_chain_rule_preimage(e):
    assert ok(forms_equal(phi(differential_preimage(MODEL, e)), d_env(MODEL, e)))


@given(smoothened_forms, rngs)
def test_phi_is_injective_pointwise(s, rng):
    # a kernel element of φ normalizes to zero
    t = phi_inverse(phi(s))
    k = SmoothenedOneForm(MODEL, s.summands + tuple((-c, w) for c, w in t.summands))
    assert all(equal(c, Const(0)).verdict is not Verdict.NOT_EQUAL for c in phi(k).flats())
    assert all(equal(c, Const(0)).verdict is not Verdict.NOT_EQUAL for c in smoothened_normalize(k).flats())


# -- derivations ------------------------------------------------------------------------


def test_coordinate_derivation_on_A():
    X = DerivationA.coordinate(MODEL, 0)
    assert apply_derivation_A(X, X1).flat == Const(1)
    assert apply_derivation_A(X, AElement.const(3)).flat == Const(0)


def test_licensing_of_derivations():
    X = DerivationA.coordinate(MODEL, 0)
    with pytest.raises(TypeError):
        apply_derivation_A(X, EXY)
    with pytest.raises(TypeError):
        apply_derivation_env(X, EXY)
    with pytest.raises(ValueError):
        DerivationA(MODEL, (one_env(),))


def test_restriction_of_lift_is_identity():
    X = DerivationA(MODEL, (embed_A(Y1), zero_env(), EXY, one_env()))
    assert restrict_Pi(nabla(X)) == X
    assert restrict_Pi(nabla(DerivationA.zero(MODEL))) == DerivationA.zero(MODEL)
    assert isinstance(nabla(X), DerivationEnv)


def test_lift_of_coordinate_derivation_on_exponential():
    X = DerivationA.coordinate(MODEL, 0)
    v = apply_derivation_env(nabla(X), EXY)
    assert v.flat == N("y1*exp(x1*y1)")
    stream = SampleStream(42, {n: (-1, 1) for n in MODEL.coordinates}, 50)
    f = compile_expr(v.flat)
    for p in stream:
        fd = directional_fd(EXY.flat, {"x1": 1}, p)
        assert abs(f(p) - fd) <= 1e-5 * (1 + abs(fd))


def test_lift_on_linear_outer_function():
    X = DerivationA.coordinate(MODEL, 0)
    lin = EnvelopeElement(P("t1 + t2"), (X1, Y1))
    assert apply_derivation_env(nabla(X), lin).flat == Const(1)
    assert apply_derivation_env(nabla(DerivationA.zero(MODEL)), EXY).flat == Const(0)


def test_lift_in_the_smallest_model():
    m11 = ProductModel(1, 1)
    X = DerivationA(m11, (embed_A(Y1), embed_A(X1)))
    v = apply_derivation_env(nabla(X), EXY)
    assert ok(equal(v.flat, P("exp(x1*y1)*(y1^2 + x1^2)")))


def test_lift_is_well_defined_on_two_representations():
    X = DerivationA(MODEL, (embed_A(Y1), one_env(), EXY, zero_env()))
    a = EnvelopeElement(P("t1 + t2"), (X1, Y1))
    b = EnvelopeElement(P("t1"), (X1 + Y1,))
    assert ok(equal(apply_derivation_env(nabla(X), a).flat, apply_derivation_env(nabla(X), b).flat))
    assert ok(forms_equal(d_env(MODEL, a), d_env(MODEL, b)))


@given(derivations, small_envs, small_envs)
def test_lift_satisfies_leibniz(X, e, f):
    D = nabla(X)
    lhs = apply_derivation_env(D, env_mul(e, f))
    rhs = env_add(env_mul(apply_derivation_env(D, e), f), env_mul(e, apply_derivation_env(D, f)))
    assert ok(equal(lhs.flat, rhs.flat))


@given(derivations, a_elements, a_elements)
def test_derivation_of_A_satisfies_leibniz(X, a, b):
    lhs = apply_derivation_A(X, a * b)
    rhs = env_add(env_mul(apply_derivation_A(X, a), embed_A(b)), env_mul(embed_A(a), apply_derivation_A(X, b)))
    assert ok(equal(lhs.flat, rhs.flat))


@given(derivations, a_elements)
def test_restriction_agrees_on_embedded_elements(X, a):
    assert ok(equal(apply_derivation_A(X, a).flat, apply_derivation_env(nabla(X), embed_A(a)).flat))


@given(derivations, a_elements, small_envs)
def test_lift_is_linear_over_A(X, a, e):
    lhs = apply_derivation_env(nabla(X.scale(a)), e)
    rhs = env_mul(embed_A(a), apply_derivation_env(nabla(X), e))
    assert ok(equal(lhs.flat, rhs.flat))


@given(derivations, small_envs, rngs)
def test_lift_is_independent_of_representation(X, e, rng):
    e2 = rerepresent(rng, e, MODEL)
    assert e2 != e
    v1 = apply_derivation_env(nabla(X), e).flat
    v2 = apply_derivation_env(nabla(X), e2).flat
    assert equal(v1, v2).verdict is not Verdict.NOT_EQUAL
    assert forms_equal(d_env(MODEL, e), d_env(MODEL, e2)).verdict is not Verdict.NOT_EQUAL


@given(derivations, small_envs, rngs)
def test_lift_matches_directional_differences(X, e, rng):
    v = apply_derivation_env(nabla(X), e).flat
    direction = {z: X.values[b].flat for b, z in enumerate(MODEL.coordinates)}
    tol = max(tier_tolerance(e.flat), *(tier_tolerance(d) for d in direction.values()))
    f = compile_expr(v)
    stream = SampleStream(rng.next(), {n: (-1, 1) for n in MODEL.coordinates}, 5)
    for p in finite_points([e.flat, v, *direction.values()], stream, 5, margin=2 * FD_STEP):
        fd = directional_fd(e.flat, direction, p)
        assert abs(f(p) - fd) <= tol * (1 + abs(fd))


@given(a_elements)
def test_d_commutes_with_the_embedding(a):
    assert ok(forms_equal(d_env(MODEL, embed_A(a)), embed_form(d_A(MODEL, a))))


# -- cotangent rank -------------------------------------------------------------------


def test_rank_examples():
    coords = [embed_A(MODEL.coordinate(i)) for i in range(MODEL.dim)]
    h = point_as_mapping(MODEL, [Fraction(1, 3), -1, Fraction(1, 2), 0])
    assert point_cotangent_rank(MODEL, coords, h) == MODEL.dim
    assert point_cotangent_rank(MODEL, [one_env()], h) == 0
    h1 = point_as_mapping(MODEL, [1, 0, 0, 0])
    assert point_cotangent_rank(MODEL, [embed_A(X1), embed_A(X1 * X1)], h1) == 1
    assert point_cotangent_rank(MODEL, [], h) == 0


def test_rank_reports_the_non_finite_element():
    bad = EnvelopeElement(P("log(t1)"), (X1,))
    with pytest.raises(NonFiniteFamily, match="element 1"):
        point_cotangent_rank(MODEL, [embed_A(X1), bad], point_as_mapping(MODEL, [-1, 0, 0, 0]))


@given(rngs)
def test_rank_never_exceeds_dimension(rng):
    fam = [rand_small_env(rng, MODEL) for _ in range(6)]
    h = {n: rng.fraction(-1, 1) for n in MODEL.coordinates}
    try:
        r = point_cotangent_rank(MODEL, fam, h)
    except NonFiniteFamily:
        return
    assert r <= MODEL.dim
