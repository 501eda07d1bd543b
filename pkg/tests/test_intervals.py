import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from envcalc.intervals import Interval, IntervalDomainError, certify_nonvanishing, interval_eval
from envcalc.parser import parse_expr as P
from envcalc.symbolic import evaluate
from strategies import MODEL, trees

UNIT = {n: (Fraction(-1), Fraction(1)) for n in MODEL.coordinates}


def test_sign_definite_coordinate_is_certified():
    assert certify_nonvanishing(P("x1"), {"x1": (Fraction(1), Fraction(2))})


def test_coordinate_through_zero_is_rejected():
    assert not certify_nonvanishing(P("x1"), {"x1": (Fraction(-1), Fraction(1))})


def test_constants():
    assert certify_nonvanishing(P("1"), {})
    assert not certify_nonvanishing(P("0"), {})


def test_needs_subdivision():
    # x^2 - x + 1 >= 3/4, but naive interval evaluation on [-1, 2] reaches below 0
    e = P("x1^2 - x1 + 1")
    box = {"x1": (Fraction(-1), Fraction(2))}
    naive = interval_eval(e, {"x1": Interval(-1.0, 2.0)})
    assert naive.contains_zero()
    assert certify_nonvanishing(e, box)


def test_transcendental_denominators():
    assert certify_nonvanishing(P("exp(x1*y1)"), UNIT)
    assert certify_nonvanishing(P("2 + sin(x1 + y2)"), UNIT)
    assert not certify_nonvanishing(P("sin(x1)"), UNIT)


def test_a_tiny_gap_is_not_certified_at_bounded_depth():
    # (x1 - 1/3)^2 + 1e-12 in expanded form loses the square to dependency
    e = P("x1^2 - 2/3*x1 + 1/9 + 1/1000000000000")
    assert not certify_nonvanishing(e, {"x1": (Fraction(-1), Fraction(1))}, max_depth=4)


def test_unbounded_variable_raises():
    with pytest.raises(KeyError):
        certify_nonvanishing(P("x1 + y1"), {"x1": (Fraction(1), Fraction(2))})


def test_interval_domain_errors():
    with pytest.raises(IntervalDomainError):
        Interval(-1.0, 1.0).recip()
    with pytest.raises(IntervalDomainError):
        Interval(0.0, 1.0).log()


@given(
    trees,
    st.fractions(min_value=-1, max_value=1, max_denominator=64),
    st.fractions(min_value=0, max_value=1, max_denominator=64),
)
def test_interval_evaluation_encloses_point_values(e, lo, width):
    hi = lo + width
    box = {n: Interval(float(lo), float(hi)) for n in MODEL.coordinates}
    try:
        iv = interval_eval(e, box)
    except IntervalDomainError:
        return
    for t in (Fraction(0), Fraction(1, 2), Fraction(1)):
        p = {n: lo + t * width for n in MODEL.coordinates}
        v = evaluate(e, p)
        if math.isfinite(v):
            assert iv.lo - 1e-9 * (1 + abs(v)) <= v <= iv.hi + 1e-9 * (1 + abs(v))


@given(st.floats(-20, 20), st.floats(0, 10))
def test_trig_enclosure(lo, w):
    iv = Interval(lo, lo + w)
    for fn in ("sin", "cos"):
        out = getattr(iv, fn)()
        for k in range(11):
            x = lo + w * k / 10
            assert out.lo <= getattr(math, fn)(x) <= out.hi
