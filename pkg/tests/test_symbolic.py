import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from envcalc.oracle import POLY_TOL, SampleStream, Verdict, central_fd, equal, finite_points
from envcalc.parser import parse_expr
from envcalc.symbolic import (
    Add,
    Const,
    Mul,
    UnboundVariableError,
    Var,
    cos,
    evaluate,
    exp,
    is_polynomial,
    is_zero,
    log,
    normalize,
    partial,
    sin,
    substitute,
    to_string,
    var,
)
from strategies import MODEL, exprs, poly_exprs, trees

x1, x2, y1, t1, t2 = (var(n) for n in ("x1", "x2", "y1", "t1", "t2"))


def n(text):
    return normalize(parse_expr(text))


def test_collects_like_terms():
    assert normalize(x1 + x1) == n("2*x1")
    assert to_string(normalize(x1 + x1)) == "2*x1"


def test_ring_axioms_cancel():
    assert normalize(x1 * (y1 + 1) - x1 * y1) == normalize(x1)


def test_additive_identity_inside_kernel():
    assert normalize(sin(x1 + 0)) == normalize(sin(x1))


def test_special_values():
    assert normalize(exp(Const(0))) == Const(1)
    assert normalize(cos(Const(0))) == Const(1)
    assert is_zero(sin(Const(0)))
    assert is_zero(log(Const(1)))


def test_rational_constants_stay_exact():
    assert normalize(parse_expr("1/3 + 1/6")) == Const(Fraction(1, 2))


def test_partial_examples():
    assert partial(t1 * t2, "t1") == normalize(t2)
    assert partial(exp(t1), "t1") == normalize(exp(t1))
    assert partial(sin(t1 * t2), t1) == normalize(t2 * cos(t1 * t2))


def test_partial_sin_product_matches_finite_differences():
    e = sin(t1 * t2)
    d = partial(e, "t1")
    stream = SampleStream(42, {"t1": (-1, 1), "t2": (-1, 1)}, 20)
    for p in stream:
        fd = central_fd(e, "t1", p)
        assert abs(evaluate(d, p) - fd) <= 1e-6 * (1 + abs(fd))


def test_partial_of_log_is_a_quotient():
    d = partial(log(x1), "x1")
    assert evaluate(d, {"x1": Fraction(1, 4)}) == pytest.approx(4.0)


def test_evaluate_examples():
    assert evaluate(x1 * y1, {"x1": 2, "y1": 3}) == 6
    assert math.isnan(evaluate(log(x1), {"x1": -1}))
    assert evaluate(exp(Const(0)), {}) == 1


def test_division_by_zero_is_not_finite():
    assert not math.isfinite(evaluate(parse_expr("1/x1"), {"x1": 0}))


def test_unbound_variable_is_named():
    with pytest.raises(UnboundVariableError, match="y1"):
        evaluate(x1 + y1, {"x1": 1})


def test_is_polynomial():
    assert is_polynomial(parse_expr("x1^2*y1 - 3"))
    assert not is_polynomial(parse_expr("exp(x1)"))
    assert not is_polynomial(parse_expr("1/x1"))


def test_substitute_then_normalize():
    e = substitute(t1 * t1, {"t1": x1 + y1})
    assert normalize(e) == n("x1^2 + 2*x1*y1 + y1^2")


def test_expression_values_are_hashable_and_immutable():
    assert hash(Var("x1")) == hash(Var("x1"))
    with pytest.raises(AttributeError):
        Var("x1").name = "x2"


@given(exprs)
def test_normalize_is_idempotent(e):
    n1 = normalize(e)
    assert normalize(n1) == n1


@given(trees)
def test_normalize_idempotent_on_independent_trees(e):
    assert normalize(normalize(e)) == normalize(e)


@given(trees, trees)
def test_sum_and_product_commute_in_normal_form(a, b):
    assert normalize(Add((a, b))) == normalize(Add((b, a)))
    assert normalize(Mul((a, b))) == normalize(Mul((b, a)))


@given(trees, trees, trees)
def test_distributivity_in_normal_form(a, b, c):
    assert normalize(Mul((a, Add((b, c))))) == normalize(Add((Mul((a, b)), Mul((a, c)))))


@given(exprs, st.sampled_from(MODEL.coordinates), st.sampled_from(MODEL.coordinates))
def test_schwarz_symmetry(e, u, v):
    assert equal(partial(partial(e, u), v), partial(partial(e, v), u)).verdict is not Verdict.NOT_EQUAL


@given(exprs, exprs, st.sampled_from(MODEL.coordinates))
def test_leibniz(a, b, v):
    lhs = partial(Mul((a, b)), v)
    rhs = Add((Mul((partial(a, v), b)), Mul((a, partial(b, v)))))
    assert equal(lhs, rhs).verdict is not Verdict.NOT_EQUAL


@given(exprs, exprs, st.sampled_from(MODEL.coordinates))
def test_partial_is_linear(a, b, v):
    assert equal(partial(Add((a, b)), v), Add((partial(a, v), partial(b, v)))).verdict is Verdict.EQUAL


@given(poly_exprs, st.sampled_from(MODEL.coordinates), st.integers(0, 2**32))
def test_partial_matches_central_differences(e, v, seed):
    d = partial(e, v)
    stream = SampleStream(seed, {c: (-1, 1) for c in MODEL.coordinates}, 5)
    for p in finite_points([e], stream, 5, margin=2e-4):
        fd = central_fd(e, v, p)
        assert abs(evaluate(d, p) - fd) <= POLY_TOL * (1 + abs(fd))


@given(exprs)
def test_printed_normal_form_parses_back(e):
    n1 = normalize(e)
    assert normalize(parse_expr(to_string(n1))) == n1
