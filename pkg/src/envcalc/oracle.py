"""Numerical ground truth: seeded sampling, equality semi-decision,
finite differences and pointwise rank.

Nothing here uses the symbolic derivative; the only symbolic entry point is
:func:`~envcalc.symbolic.evaluate`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Mapping, Sequence, Union

from .symbolic import Expr, compile_expr, free_vars, is_polynomial, normalize, var_sort_key

MASK64 = (1 << 64) - 1
SAMPLE_DENOMINATOR = 1 << 16
MAX_RETRIES = 100

POLY_TOL = 1e-6
TRANS_TOL = 1e-5
FD_STEP = 1e-4


class SplitMix64:
    """Integer-only generator; identical streams on every platform."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next() * n) >> 64

    def between(self, lo: int, hi: int) -> int:
        """Uniform integer in ``[lo, hi]``."""
        return lo + self.below(hi - lo + 1)

    def choice(self, seq: Sequence):
        return seq[self.below(len(seq))]

    def chance(self, num: int, den: int) -> bool:
        return self.below(den) < num

    def fraction(self, lo, hi, den: int = SAMPLE_DENOMINATOR) -> Fraction:
        """Rational strictly inside ``(lo, hi)`` with denominator dividing ``den``-scaled width."""
        lo, hi = Fraction(lo), Fraction(hi)
        k = self.between(1, den - 1)
        # lo + (hi - lo) k / den as one integer ratio
        d = lo.denominator * hi.denominator
        a = lo.numerator * hi.denominator
        b = hi.numerator * lo.denominator - a
        return Fraction(a * den + b * k, d * den)

    def fork(self, *salt: int) -> "SplitMix64":
        s = self.state
        for v in salt:
            s = SplitMix64(s ^ (v * 0xD1B54A32D192ED03 & MASK64)).next()
        return SplitMix64(s)


def case_rng(seed: int, suite: str, index: int) -> SplitMix64:
    """Independent generator for one case of a suite."""
    salt = sum(ord(c) << (8 * (i % 7)) for i, c in enumerate(suite))
    return SplitMix64(seed).fork(salt, index)


Box = Mapping[str, tuple[Fraction, Fraction]]


@dataclass(frozen=True)
class OracleConfig:
    """Sampling parameters for the equality and finite-difference oracles.

    ``box`` is the default interval for every coordinate; ``region``
    overrides it per variable name.
    """

    seed: int = 42
    samples: int = 64
    tolerance: float = 1e-9
    box: tuple[Fraction, Fraction] = (Fraction(-1), Fraction(1))
    region: Mapping[str, tuple[Fraction, Fraction]] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def domain(self, names) -> dict[str, tuple[Fraction, Fraction]]:
        out = {}
        for n in sorted(names, key=var_sort_key):
            if self.region is not None and n in self.region:
                out[n] = self.region[n]
            else:
                out[n] = self.box
        return out

    def with_region(self, region: Mapping[str, tuple[Fraction, Fraction]]) -> "OracleConfig":
        return OracleConfig(self.seed, self.samples, self.tolerance, self.box, dict(region))


class SampleStream:
    """Seeded rational points in a box (denominators divide 2^16 times the width)."""

    def __init__(self, seed: int, domain: Box, count: int):
        self.seed = seed
        self.domain = dict(domain)
        self.count = count

    def points(self, count: int | None = None) -> Iterator[dict[str, Fraction]]:
        rng = SplitMix64(self.seed)
        names = sorted(self.domain, key=var_sort_key)
        for _ in range(self.count if count is None else count):
            yield {n: rng.fraction(*self.domain[n]) for n in names}

    def __iter__(self):
        return self.points()


class NonFiniteSample(ArithmeticError):
    """A function was evaluated where it is not finite; the caller should resample."""


Evaluable = Union[Expr, Callable[[Mapping], float]]


def _as_callable(f: Evaluable) -> Callable[[Mapping], float]:
    if isinstance(f, Expr):
        return compile_expr(f)
    return f


def finite_points(fs: Sequence[Evaluable], stream: SampleStream, count: int, *, margin: float = 0.0):
    """Yield ``count`` sample points where every ``f`` is finite.

    Each accepted point may need up to ``MAX_RETRIES`` redraws; with
    ``margin`` the functions must also be finite at ``p +- margin`` along
    every coordinate (so central differences are defined).
    """
    calls = [_as_callable(f) for f in fs]
    it = stream.points(count * (MAX_RETRIES + 1))
    produced = 0
    misses = 0
    for p in it:
        if produced >= count:
            return
        if _all_finite(calls, p, margin):
            produced += 1
            misses = 0
            yield p
        else:
            misses += 1
            if misses > MAX_RETRIES:
                return


def _all_finite(calls, p, margin) -> bool:
    for f in calls:
        if not math.isfinite(f(p)):
            return False
        if margin:
            for n in p:
                for s in (margin, -margin):
                    q = dict(p)
                    q[n] = float(p[n]) + s
                    if not math.isfinite(f(q)):
                        return False
    return True


def residual(a: float, b: float) -> float:
    """Relative residual ``|a - b| / (1 + |b|)``."""
    return abs(a - b) / (1.0 + abs(b))


class Verdict(enum.Enum):
    EQUAL = "equal"
    NOT_EQUAL = "not-equal"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Equality:
    verdict: Verdict
    samples: int = 0
    residual: float = 0.0
    witness: Mapping | None = None

    @property
    def refuted(self) -> bool:
        return self.verdict is Verdict.NOT_EQUAL

    def __bool__(self):
        # Undetermined counts as "not refuted"; callers wanting certainty check .verdict
        return self.verdict is not Verdict.NOT_EQUAL


def equal(e1: Expr, e2: Expr, cfg: OracleConfig = OracleConfig()) -> Equality:
    """Three-valued equality of two expressions.

    Equal when the normal forms coincide; otherwise sample ``cfg.samples``
    points of the box and report NotEqual on the first point separating the
    two values beyond ``cfg.tolerance`` (relative), else Undetermined.
    """
    n1, n2 = normalize(e1), normalize(e2)
    if n1 == n2:
        return Equality(Verdict.EQUAL)
    names = free_vars(n1) | free_vars(n2)
    f1, f2 = compile_expr(n1), compile_expr(n2)
    stream = SampleStream(cfg.seed, cfg.domain(names), cfg.samples)
    worst = 0.0
    used = 0
    for p in finite_points([f1, f2], stream, cfg.samples):
        used += 1
        a, b = f1(p), f2(p)
        r = abs(a - b) / (1.0 + max(abs(a), abs(b)))
        worst = max(worst, r)
        if r > cfg.tolerance:
            return Equality(Verdict.NOT_EQUAL, used, r, dict(p))
    return Equality(Verdict.UNDETERMINED, used, worst)


def tier(e: Expr) -> str:
    return "polynomial" if is_polynomial(e) else "transcendental"


def tier_tolerance(e: Expr) -> float:
    return POLY_TOL if is_polynomial(e) else TRANS_TOL


def central_fd(f: Evaluable, v: str, p: Mapping, h: float = FD_STEP) -> float:
    """Central difference ``(f(p + h e_v) - f(p - h e_v)) / 2h``."""
    call = _as_callable(f)
    name = getattr(v, "name", v)
    base = {k: float(x) for k, x in p.items()}
    x0 = base.get(name, 0.0)
    base[name] = x0 + h
    fp = call(base)
    base[name] = x0 - h
    fm = call(base)
    if not (math.isfinite(fp) and math.isfinite(fm)):
        raise NonFiniteSample(f"non-finite value near {name}={x0}")
    return (fp - fm) / (2 * h)


def fd_gradient(f: Evaluable, names: Sequence[str], p: Mapping, h: float = FD_STEP) -> list[float]:
    return [central_fd(f, n, p, h) for n in names]


def directional_fd(
    f: Evaluable, direction: Mapping[str, Evaluable], p: Mapping, h: float = FD_STEP
) -> float:
    """``sum_j central_fd(f, x_j, p) * direction_j(p)``."""
    total = 0.0
    for name, comp in direction.items():
        w = _as_callable(comp)(p) if not isinstance(comp, (int, float, Fraction)) else float(comp)
        if not math.isfinite(w):
            raise NonFiniteSample(f"direction component {name} not finite")
        if w == 0.0:
            continue
        total += central_fd(f, name, p, h) * w
    return total


def rank_at(rows: Sequence[Sequence[float]], tol: float | None = None) -> int:
    """Numerical rank by Gaussian elimination with partial pivoting.

    Pivots below ``tol`` (default ``1e-8 * max |entry|``) are treated as zero.
    """
    m = [list(map(float, r)) for r in rows]
    if not m:
        return 0
    width = len(m[0])
    if any(len(r) != width for r in m):
        raise ValueError("rows must have equal length")
    scale = max((abs(x) for r in m for x in r), default=0.0)
    if scale == 0.0:
        return 0
    thresh = 1e-8 * scale if tol is None else tol
    rank = 0
    for col in range(width):
        piv = max(range(rank, len(m)), key=lambda i: abs(m[i][col]), default=None)
        if piv is None or abs(m[piv][col]) <= thresh:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        pr = m[rank]
        for i in range(rank + 1, len(m)):
            f = m[i][col] / pr[col]
            if f:
                row = m[i]
                for j in range(col, width):
                    row[j] -= f * pr[j]
        rank += 1
        if rank == len(m):
            break
    return rank
