import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from envcalc.oracle import (
    MAX_RETRIES,
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
    tier,
)
from envcalc.parser import parse_expr as P
from strategies import MODEL, seeds

ONES = {n: 1 for n in MODEL.coordinates}


def test_central_fd_of_square_is_exact_up_to_roundoff():
    assert central_fd(P("x1^2"), "x1", ONES) == pytest.approx(2.0, abs=1e-7)


def test_central_fd_of_constant_is_zero():
    assert abs(central_fd(P("3"), "x1", ONES)) <= 1e-9


def test_central_fd_of_exponential_product():
    assert central_fd(P("exp(x1*y1)"), "x1", ONES) == pytest.approx(math.e, abs=1e-5)


def test_central_fd_signals_non_finite_neighbourhood():
    with pytest.raises(NonFiniteSample):
        central_fd(P("log(x1)"), "x1", {"x1": Fraction(1, 100000)})


def test_directional_fd_examples():
    p = {"x1": 1, "y1": 2}
    assert directional_fd(P("x1"), {"x1": 1}, p) == pytest.approx(1.0)
    assert directional_fd(P("x1*y1"), {"x1": P("y1"), "y1": P("x1")}, p) == pytest.approx(5.0, abs=1e-7)
    assert directional_fd(P("x1*y1"), {"x1": 0, "y1": 0}, p) == 0.0


def test_rank_examples():
    assert rank_at([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 3
    assert rank_at([[1, 2, 3], [2, 4, 6]]) == 1
    assert rank_at([]) == 0
    assert rank_at([[0, 0]]) == 0


def test_rank_of_generic_vectors():
    rng = SplitMix64(7)
    k = MODEL.dim
    rows = [[float(rng.fraction(-1, 1)) for _ in range(k)] for _ in range(20)]
    assert rank_at(rows) == min(20, k)


def test_rank_with_known_pivots():
    # upper triangular with nonzero diagonal, plus combinations of its rows
    base = [[1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 5.0, 6.0], [0.0, 0.0, 2.0, 7.0]]
    extra = [[a + 2 * b - c for a, b, c in zip(*base)]]
    assert rank_at(base + extra) == 3


def test_rank_rejects_ragged_rows():
    with pytest.raises(ValueError):
        rank_at([[1, 2], [1]])


def test_sample_stream_is_reproducible_and_rational():
    box = {"x1": (Fraction(-1), Fraction(1)), "y1": (Fraction(0), Fraction(1, 3))}
    a = list(SampleStream(42, box, 50))
    b = list(SampleStream(42, box, 50))
    assert a == b
    for p in a:
        assert all(isinstance(v, Fraction) for v in p.values())
        assert -1 < p["x1"] < 1 and 0 < p["y1"] < Fraction(1, 3)
        assert (p["x1"].denominator & (p["x1"].denominator - 1)) == 0
        assert p["x1"].denominator <= 1 << 16
    assert list(SampleStream(43, box, 50)) != a


def test_splitmix_known_first_value():
    # reference value of the splitmix64 sequence for seed 0
    assert SplitMix64(0).next() == 0xE220A8397B1DCDAF


def test_case_streams_are_independent_of_order():
    a = [case_rng(42, "s", i).next() for i in range(5)]
    b = [case_rng(42, "s", i).next() for i in reversed(range(5))][::-1]
    assert a == b
    assert len(set(a)) == 5


def test_finite_points_skips_singular_samples():
    e = P("log(x1)")
    pts = list(finite_points([e], SampleStream(1, {"x1": (-1, 1)}, 10), 10))
    assert len(pts) == 10
    assert all(p["x1"] > 0 for p in pts)


def test_finite_points_gives_up_after_retries():
    e = P("log(0 - x1*x1 - 1)")
    pts = list(finite_points([e], SampleStream(1, {"x1": (-1, 1)}, 5), 5))
    assert pts == []
    assert MAX_RETRIES == 100


def test_equal_examples():
    assert equal(P("x1 + y1"), P("y1 + x1")).verdict is Verdict.EQUAL
    ne = equal(P("x1"), P("y1"))
    assert ne.verdict is Verdict.NOT_EQUAL and ne.witness is not None
    assert not ne


def test_undetermined_reports_sample_count():
    eq = equal(P("sin(x1)^2 + cos(x1)^2"), P("1"), OracleConfig(samples=64))
    assert eq.verdict in (Verdict.EQUAL, Verdict.UNDETERMINED)
    if eq.verdict is Verdict.UNDETERMINED:
        assert eq.samples == 64


def test_tiers():
    assert tier(P("x1^3 - y1")) == "polynomial"
    assert tier(P("exp(x1)")) == "transcendental"


@given(seeds, st.integers(1, 20))
def test_fraction_stays_inside_the_open_interval(seed, den):
    rng = SplitMix64(seed)
    lo, hi = Fraction(-den, 7), Fraction(den, 3)
    for _ in range(20):
        v = rng.fraction(lo, hi)
        assert lo < v < hi


@given(seeds, st.integers(1, 50))
def test_below_is_in_range(seed, n):
    rng = SplitMix64(seed)
    assert all(0 <= rng.below(n) < n for _ in range(20))


@given(st.lists(st.lists(st.integers(-5, 5), min_size=3, max_size=3), max_size=6))
def test_rank_is_bounded_by_shape(rows):
    r = rank_at(rows)
    assert 0 <= r <= min(len(rows), 3)


@given(st.lists(st.lists(st.integers(-5, 5), min_size=3, max_size=3), min_size=1, max_size=5))
def test_rank_ignores_duplicated_rows(rows):
    assert rank_at(rows + rows) == rank_at(rows)
