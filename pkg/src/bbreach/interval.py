"""Intervals and axis-aligned boxes with outward-rounded arithmetic.

Every arithmetic result is widened by one unit in the last place per
endpoint (two for library transcendentals, which are not correctly rounded),
so results enclose the exact real result without switching FPU rounding
modes. Sums use the exact TwoSum error to widen only endpoints that were
rounded the wrong way; scaling by a power of two is exact. Values are immutable tuples and safe to share between workers.
"""

from __future__ import annotations

import math
import sys
from typing import Iterable, NamedTuple, Sequence

_INF = math.inf


class IntervalError(ValueError):
    """Invalid interval construction or an undefined interval operation."""


class DomainError(IntervalError):
    """Operation outside the domain of a function (sqrt of negatives, 1/0)."""


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _widen(lo: float, hi: float) -> "Interval":
    return tuple.__new__(Interval, (_down(lo), _up(hi)))


def _widen2(lo: float, hi: float) -> "Interval":
    return tuple.__new__(Interval, (_down(_down(lo)), _up(_up(hi))))


def _two_sum_err(a: float, b: float, s: float) -> float:
    # exact rounding error of s = fl(a + b) (Knuth's TwoSum); nan on overflow
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def _add_lo(a: float, b: float) -> float:
    s = a + b
    return s if _two_sum_err(a, b, s) >= 0.0 else _down(s)


def _add_hi(a: float, b: float) -> float:
    s = a + b
    return s if _two_sum_err(a, b, s) <= 0.0 else _up(s)


def _normal(v: float) -> bool:
    return v == 0.0 or sys.float_info.min <= abs(v) < _INF


def _scaled_exactly(x, s) -> bool:
    """True when ``s`` is a point +-2^k and ``x * s`` is exact at both endpoints."""
    if s.lo != s.hi or abs(math.frexp(s.lo)[0]) != 0.5:
        return False
    return all(_normal(v) and _normal(v * s.lo) and (v == 0.0) == (v * s.lo == 0.0) for v in x)


class Interval(NamedTuple):
    """Closed interval ``[lo, hi]`` with finite endpoints."""

    lo: float
    hi: float

    @classmethod
    def make(cls, lo: float, hi: float | None = None) -> "Interval":
        """Validated constructor; ``make(x)`` gives the degenerate ``[x, x]``."""
        if hi is None:
            hi = lo
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise IntervalError(f"non-finite endpoint in [{lo}, {hi}]")
        if lo > hi:
            raise IntervalError(f"empty interval [{lo}, {hi}]")
        return tuple.__new__(cls, (lo, hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def subset(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    # arithmetic; operands may be Interval or plain numbers

    def __neg__(self) -> "Interval":
        return tuple.__new__(Interval, (-self.hi, -self.lo))

    def __add__(self, other) -> "Interval":  # type: ignore[override]
        o = _coerce(other)
        if o.lo == 0.0 and o.hi == 0.0:
            return self
        if self.lo == 0.0 and self.hi == 0.0:
            return o
        return tuple.__new__(Interval, (_add_lo(self.lo, o.lo), _add_hi(self.hi, o.hi)))

    __radd__ = __add__

    def __sub__(self, other) -> "Interval":
        o = _coerce(other)
        if o.lo == 0.0 and o.hi == 0.0:
            return self
        return tuple.__new__(Interval, (_add_lo(self.lo, -o.hi), _add_hi(self.hi, -o.lo)))

    def __rsub__(self, other) -> "Interval":
        return _coerce(other) - self

    def __mul__(self, other) -> "Interval":  # type: ignore[override]
        o = _coerce(other)
        if (o.lo == 0.0 and o.hi == 0.0) or (self.lo == 0.0 and self.hi == 0.0):
            return _ZERO
        a, b, c, d = self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi
        lo, hi = min(a, b, c, d), max(a, b, c, d)
        if _scaled_exactly(self, o) or _scaled_exactly(o, self):
            return Interval(lo, hi)
        return _widen(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Interval":
        o = _coerce(other)
        if o.lo <= 0.0 <= o.hi:
            raise DomainError(f"division by interval containing zero: {o}")
        if self.lo == 0.0 and self.hi == 0.0:
            return _ZERO
        a, b, c, d = self.lo / o.lo, self.lo / o.hi, self.hi / o.lo, self.hi / o.hi
        lo, hi = min(a, b, c, d), max(a, b, c, d)
        if o.lo == o.hi and _scaled_exactly(self, Interval(1.0 / o.lo, 1.0 / o.lo)):
            return Interval(lo, hi)
        return _widen(lo, hi)

    def __rtruediv__(self, other) -> "Interval":
        return _coerce(other) / self

    def __pow__(self, n: int) -> "Interval":  # type: ignore[override]
        return ipow(self, n)

    def __repr__(self) -> str:
        return f"[{self.lo!r}, {self.hi!r}]"


_ZERO = tuple.__new__(Interval, (0.0, 0.0))


def _coerce(x) -> Interval:
    if isinstance(x, Interval):
        return x
    x = float(x)
    return tuple.__new__(Interval, (x, x))


def point(x: float) -> Interval:
    return _coerce(x)


def isqr(x: Interval) -> Interval:
    """Square with the even-power tightening ``x**2 >= 0``."""
    lo, hi = x
    if lo >= 0.0:
        return _widen(lo * lo, hi * hi)
    if hi <= 0.0:
        return _widen(hi * hi, lo * lo)
    return tuple.__new__(Interval, (0.0, _up(max(lo * lo, hi * hi))))


def ipow(x: Interval, n: int) -> Interval:
    """Integer power by repeated squaring; even powers are never negative."""
    if n < 0:
        raise IntervalError("negative exponents are not supported")
    if n == 0:
        return tuple.__new__(Interval, (1.0, 1.0))
    if n == 1:
        return x
    half = ipow(x, n // 2)
    sq = isqr(half)
    if n % 2:
        return sq * x
    return sq


def isqrt(x: Interval) -> Interval:
    if x.lo < 0.0:
        raise DomainError(f"sqrt of interval with negative part: {x}")
    return tuple.__new__(Interval, (max(0.0, _down(_down(math.sqrt(x.lo)))), _up(_up(math.sqrt(x.hi)))))


def iexp(x: Interval) -> Interval:
    lo = max(0.0, _down(_down(math.exp(x.lo))))
    return tuple.__new__(Interval, (lo, _up(_up(math.exp(x.hi)))))


def itanh(x: Interval) -> Interval:
    lo = max(-1.0, _down(_down(math.tanh(x.lo))))
    hi = min(1.0, _up(_up(math.tanh(x.hi))))
    return tuple.__new__(Interval, (lo, hi))


def _has_crit(lo: float, hi: float, phase: float) -> bool:
    # True if lo <= phase + 2*pi*k <= hi for some integer k
    k = math.ceil((lo - phase) / (2 * math.pi) - 1e-12)
    return phase + 2 * math.pi * k <= hi + 1e-12


def isin(x: Interval) -> Interval:
    lo, hi = x
    if hi - lo >= 2 * math.pi:
        return tuple.__new__(Interval, (-1.0, 1.0))
    a, b = math.sin(lo), math.sin(hi)
    out_lo, out_hi = min(a, b), max(a, b)
    if _has_crit(lo, hi, math.pi / 2):
        out_hi = 1.0
    if _has_crit(lo, hi, -math.pi / 2):
        out_lo = -1.0
    r = _widen2(out_lo, out_hi)
    return tuple.__new__(Interval, (max(-1.0, r.lo), min(1.0, r.hi)))


def icos(x: Interval) -> Interval:
    lo, hi = x
    if hi - lo >= 2 * math.pi:
        return tuple.__new__(Interval, (-1.0, 1.0))
    a, b = math.cos(lo), math.cos(hi)
    out_lo, out_hi = min(a, b), max(a, b)
    if _has_crit(lo, hi, 0.0):
        out_hi = 1.0
    if _has_crit(lo, hi, math.pi):
        out_lo = -1.0
    r = _widen2(out_lo, out_hi)
    return tuple.__new__(Interval, (max(-1.0, r.lo), min(1.0, r.hi)))


def interval_hull(a: Interval, b: Interval) -> Interval:
    return tuple.__new__(Interval, (min(a.lo, b.lo), max(a.hi, b.hi)))


class IntervalBox(tuple):
    """Closed axis-aligned box, an immutable tuple of :class:`Interval`.

    ``IntervalBox.from_flat((l1, u1, ..., ln, un))`` matches the usual
    ``(l1, u1, ..., ln, un)`` notation.
    """

    __slots__ = ()

    def __new__(cls, dims: Iterable[Interval | Sequence[float]]):
        items = tuple(d if isinstance(d, Interval) else Interval.make(*d) for d in dims)
        if not items:
            raise IntervalError("a box needs at least one dimension")
        return tuple.__new__(cls, items)

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "IntervalBox":
        if len(flat) % 2:
            raise IntervalError("flat box needs an even number of endpoints")
        return cls(Interval.make(flat[i], flat[i + 1]) for i in range(0, len(flat), 2))

    @classmethod
    def from_bounds(cls, lower: Sequence[float], upper: Sequence[float]) -> "IntervalBox":
        if len(lower) != len(upper):
            raise IntervalError("lower/upper length mismatch")
        return cls(Interval.make(lo, hi) for lo, hi in zip(lower, upper))

    @classmethod
    def point(cls, x: Sequence[float]) -> "IntervalBox":
        return cls(Interval.make(v) for v in x)

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def lower(self) -> tuple[float, ...]:
        return tuple(iv.lo for iv in self)

    @property
    def upper(self) -> tuple[float, ...]:
        return tuple(iv.hi for iv in self)

    @property
    def midpoint(self) -> tuple[float, ...]:
        return tuple(iv.mid for iv in self)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(iv.hi - iv.lo for iv in self)

    def flat(self) -> tuple[float, ...]:
        return tuple(v for iv in self for v in iv)

    def volume(self) -> float:
        return math.prod(iv.hi - iv.lo for iv in self)

    def subset(self, other: "IntervalBox") -> bool:
        _check_dims(self, other)
        return all(o.lo <= s.lo and s.hi <= o.hi for s, o in zip(self, other))

    def __repr__(self) -> str:
        return "IntervalBox(" + ", ".join(f"[{iv.lo:.6g}, {iv.hi:.6g}]" for iv in self) + ")"


def _check_dims(a: Sequence, b: Sequence) -> None:
    if len(a) != len(b):
        raise IntervalError(f"dimension mismatch: {len(a)} vs {len(b)}")


def hull(a: IntervalBox, b: IntervalBox) -> IntervalBox:
    """Smallest box containing both ``a`` and ``b``."""
    _check_dims(a, b)
    return tuple.__new__(IntervalBox, tuple(
        tuple.__new__(Interval, (min(x.lo, y.lo), max(x.hi, y.hi))) for x, y in zip(a, b)
    ))


def hull_all(boxes: Iterable[IntervalBox]) -> IntervalBox:
    it = iter(boxes)
    try:
        acc = next(it)
    except StopIteration:
        raise IntervalError("hull of no boxes") from None
    for b in it:
        acc = hull(acc, b)
    return acc


def intersect(a: IntervalBox, b: IntervalBox) -> IntervalBox | None:
    """Componentwise intersection, or ``None`` when some dimension is empty."""
    _check_dims(a, b)
    dims = []
    for x, y in zip(a, b):
        lo, hi = max(x.lo, y.lo), min(x.hi, y.hi)
        if lo > hi:
            return None
        dims.append(tuple.__new__(Interval, (lo, hi)))
    return tuple.__new__(IntervalBox, tuple(dims))


def contains(box: IntervalBox, x: Sequence[float]) -> bool:
    _check_dims(box, x)
    return all(iv.lo <= v <= iv.hi for iv, v in zip(box, x))


def inflate(box: IntervalBox, eps: float | Sequence[float] = 0.0) -> IntervalBox:
    """Move every endpoint outward by ``eps`` and then by one ulp."""
    if isinstance(eps, (int, float)):
        eps = [float(eps)] * len(box)
    if any(e < 0 for e in eps):
        raise IntervalError("inflate needs eps >= 0")
    return tuple.__new__(IntervalBox, tuple(
        tuple.__new__(Interval, (_down(iv.lo - e), _up(iv.hi + e))) for iv, e in zip(box, eps)
    ))


def overlaps(a: IntervalBox, b: IntervalBox) -> bool:
    return intersect(a, b) is not None
