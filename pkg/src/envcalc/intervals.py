"""Outward-rounded interval arithmetic and a nonvanishing certifier."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .symbolic import Add, Call, Const, Expr, Mul, Neg, Pow, Var, compile_expr, var_sort_key

MAX_DEPTH = 12


class IntervalDomainError(ArithmeticError):
    pass


def _down(x: float) -> float:
    return math.nextafter(x, -math.inf)


def _up(x: float) -> float:
    return math.nextafter(x, math.inf)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @classmethod
    def point(cls, v) -> "Interval":
        if isinstance(v, Fraction):
            f = float(v)
            return cls(_down(f), _up(f)) if Fraction(f) != v else cls(f, f)
        return cls(float(v), float(v))

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def __add__(self, o: "Interval") -> "Interval":
        return Interval(_down(self.lo + o.lo), _up(self.hi + o.hi))

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, o: "Interval") -> "Interval":
        ps = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi]
        ps = [0.0 if math.isnan(p) else p for p in ps]
        return Interval(_down(min(ps)), _up(max(ps)))

    def recip(self) -> "Interval":
        if self.contains_zero():
            raise IntervalDomainError("division by an interval containing 0")
        return Interval(_down(1.0 / self.hi), _up(1.0 / self.lo))

    def __pow__(self, k: int) -> "Interval":
        if k < 0:
            return (self ** (-k)).recip()
        if k == 0:
            return Interval(1.0, 1.0)
        lo, hi = self.lo, self.hi
        try:
            a, b = lo**k, hi**k
        except OverflowError:
            return Interval(-math.inf, math.inf)
        if k % 2:
            return Interval(_down(a), _up(b))
        if lo >= 0:
            return Interval(_down(a), _up(b))
        if hi <= 0:
            return Interval(_down(b), _up(a))
        return Interval(0.0, _up(max(a, b)))

    def exp(self) -> "Interval":
        def safe(x):
            try:
                return math.exp(x)
            except OverflowError:
                return math.inf

        return Interval(max(0.0, _down(safe(self.lo))), _up(safe(self.hi)))

    def log(self) -> "Interval":
        if self.lo <= 0:
            raise IntervalDomainError("log of an interval reaching 0")
        return Interval(_down(math.log(self.lo)), _up(math.log(self.hi)))

    def _trig(self, fn, peaks_at: float) -> "Interval":
        # peaks_at: phase where fn attains +1 (then -1 half a period later)
        if self.hi - self.lo >= 2 * math.pi or not math.isfinite(self.hi - self.lo):
            return Interval(-1.0, 1.0)
        a, b = fn(self.lo), fn(self.hi)
        lo, hi = min(a, b), max(a, b)
        k = math.ceil((self.lo - peaks_at) / math.pi)
        while peaks_at + k * math.pi <= self.hi:
            if k % 2 == 0:
                hi = 1.0
            else:
                lo = -1.0
            k += 1
        return Interval(max(-1.0, _down(lo)), min(1.0, _up(hi)))

    def sin(self) -> "Interval":
        return self._trig(math.sin, math.pi / 2)

    def cos(self) -> "Interval":
        return self._trig(math.cos, 0.0)


def interval_eval(e: Expr, box: Mapping[str, Interval]) -> Interval:
    t = type(e)
    if t is Const:
        return Interval.point(e.value)
    if t is Var:
        return box[e.name]
    if t is Add:
        out = Interval(0.0, 0.0)
        for a in e.args:
            out = out + interval_eval(a, box)
        return out
    if t is Mul:
        out = Interval(1.0, 1.0)
        for a in e.args:
            out = out * interval_eval(a, box)
        return out
    if t is Neg:
        return -interval_eval(e.arg, box)
    if t is Pow:
        return interval_eval(e.base, box) ** e.exp
    if t is Call:
        return getattr(interval_eval(e.arg, box), e.fn)()
    raise TypeError(t)


def certify_nonvanishing(
    e: Expr, region: Mapping[str, tuple[Fraction, Fraction]], max_depth: int = MAX_DEPTH
) -> bool:
    """True only if ``e`` provably has no zero (and no singularity) on the box.

    Boxes are bisected along their widest side; a box that still straddles 0
    at ``max_depth`` makes the certification fail.
    """
    names = sorted(region, key=var_sort_key)
    missing = e.free_vars - set(names)
    if missing:
        raise KeyError(f"region does not bound {sorted(missing)}")
    f = compile_expr(e)
    used = [n for n in names if n in e.free_vars]
    # cheap refutation: a sign change or zero between corners/centre means no certificate
    probes = [{n: (region[n][0] + region[n][1]) / 2 for n in names}]
    for bits in range(min(1 << len(names), 16)):
        probes.append(
            {n: (region[n][1] if bits >> i & 1 else region[n][0]) for i, n in enumerate(names)}
        )
    signs = set()
    for p in probes:
        v = f(p)
        if not math.isfinite(v) or v == 0:
            return False
        signs.add(v > 0)
    if len(signs) > 1:
        return False

    stack = [({n: (Fraction(region[n][0]), Fraction(region[n][1])) for n in names}, 0)]
    while stack:
        box, depth = stack.pop()
        ibox = {n: Interval(_down(float(lo)), _up(float(hi))) for n, (lo, hi) in box.items()}
        try:
            iv = interval_eval(e, ibox)
            ok = not iv.contains_zero() and math.isfinite(iv.lo) and math.isfinite(iv.hi)
        except IntervalDomainError:
            ok = False
        if ok:
            continue
        if depth >= max_depth or not used:
            return False
        widest = max(used, key=lambda n: box[n][1] - box[n][0])
        lo, hi = box[widest]
        mid = (lo + hi) / 2
        left, right = dict(box), dict(box)
        left[widest] = (lo, mid)
        right[widest] = (mid, hi)
        stack.append((right, depth + 1))
        stack.append((left, depth + 1))
    return True
