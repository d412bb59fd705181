"""Computable reals as tolerance-driven rational enclosures.

A Real is a deterministic procedure that, for any positive rational
tolerance eps, produces a rational interval [l, u] with u - l <= eps that
contains the number.  Any two enclosures of the same Real intersect, so
the lower endpoints approximate from below and the upper endpoints from
above; exactness is never assumed and equality is never decided.  All
derived arithmetic keeps those guarantees by budgeting the tolerance it
passes to its operands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

from .errors import NotSeparatedFromZero
from .ratmath import Rat, RatLike, ZERO, rat, rat_floor, to_fraction


@dataclass(frozen=True)
class RatInterval:
    """A closed rational interval [lo, hi] with lo <= hi."""

    lo: Rat
    hi: Rat

    def __post_init__(self):
        object.__setattr__(self, "lo", rat(self.lo))
        object.__setattr__(self, "hi", rat(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"interval endpoints out of order: {self.lo} > {self.hi}")

    def width(self) -> Rat:
        return self.hi - self.lo

    def midpoint(self) -> Rat:
        return (self.lo + self.hi) / 2

    def contains(self, q: RatLike) -> bool:
        q = rat(q)
        return self.lo <= q <= self.hi

    def contains_interval(self, other: "RatInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: "RatInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def hull(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersection(self, other: "RatInterval") -> "RatInterval":
        return RatInterval(max(self.lo, other.lo), min(self.hi, other.hi))

    def __repr__(self):
        return f"[{self.lo}, {self.hi}]"


@dataclass(frozen=True)
class Apartness:
    """Outcome of an effective comparison.

    "less" and "greater" are certified by disjoint enclosures and are never
    wrong.  "indistinguishable" only records that the enclosures at the
    given tolerance overlapped; it is not a claim of equality.
    """

    kind: str
    eps: Optional[Rat] = None

    @property
    def is_less(self) -> bool:
        return self.kind == "less"

    @property
    def is_greater(self) -> bool:
        return self.kind == "greater"

    @property
    def is_indistinguishable(self) -> bool:
        return self.kind == "indistinguishable"


LESS = Apartness("less")
GREATER = Apartness("greater")


def indistinguishable(eps: RatLike) -> Apartness:
    return Apartness("indistinguishable", rat(eps))


class Real:
    """A tolerance-queryable real number.

    ``approx(eps)`` returns an enclosure of width at most eps.  Queries are
    memoized, which also pins down determinism: the same tolerance always
    yields the identical enclosure.  Instances are immutable values and the
    query is re-entrant, so Reals can be shared freely between threads.

    ``exact`` is set when the number is a known rational; it enables exact
    fast paths (point enclosures, decidable comparisons) without ever being
    required for correctness.
    """

    __slots__ = ("_fn", "_cache", "exact")

    def __init__(self, fn: Callable[[Rat], RatInterval], exact: Optional[Rat] = None):
        self._fn = fn
        self._cache: dict = {}
        self.exact = None if exact is None else rat(exact)

    def approx(self, eps: RatLike) -> RatInterval:
        eps = rat(eps)
        if eps <= 0:
            raise ValueError("tolerance must be positive")
        if self.exact is not None:
            return RatInterval(self.exact, self.exact)
        hit = self._cache.get(eps)
        if hit is not None:
            return hit
        iv = self._fn(eps)
        if iv.width() > eps:
            raise AssertionError(
                f"enclosure width {iv.width()} exceeds requested tolerance {eps}"
            )
        self._cache[eps] = iv
        return iv

    def __repr__(self):
        if self.exact is not None:
            return f"Real({self.exact})"
        iv = self.approx(rat(1, 1024))
        return f"Real(~{iv})"


def real_from_rational(q: RatLike) -> Real:
    """Embed a rational exactly; every enclosure is the point [q, q]."""
    q = rat(q)
    return Real(lambda eps: RatInterval(q, q), exact=q)


def real_from_interval_fn(fn: Callable[[Rat], RatInterval]) -> Real:
    return Real(fn)


def _binary(x: Real, y: Real, combine, exact_combine) -> Real:
    """Build a binary derived Real; operands are queried at eps/2 each."""
    if x.exact is not None and y.exact is not None:
        return real_from_rational(exact_combine(x.exact, y.exact))

    def fn(eps: Rat) -> RatInterval:
        half = eps / 2
        return combine(x.approx(half), y.approx(half))

    return Real(fn)


def add(x: Real, y: Real) -> Real:
    return _binary(
        x, y,
        lambda a, b: RatInterval(a.lo + b.lo, a.hi + b.hi),
        lambda p, q: p + q,
    )


def neg(x: Real) -> Real:
    if x.exact is not None:
        return real_from_rational(-x.exact)
    return Real(lambda eps: _ineg(x.approx(eps)))


def _ineg(a: RatInterval) -> RatInterval:
    return RatInterval(-a.hi, -a.lo)


def sub(x: Real, y: Real) -> Real:
    return add(x, neg(y))


def rmin(x: Real, y: Real) -> Real:
    return _binary(
        x, y,
        lambda a, b: RatInterval(min(a.lo, b.lo), min(a.hi, b.hi)),
        min,
    )


def rmax(x: Real, y: Real) -> Real:
    return _binary(
        x, y,
        lambda a, b: RatInterval(max(a.lo, b.lo), max(a.hi, b.hi)),
        max,
    )


def tminus(y: Real, x: Real) -> Real:
    """Truncated minus: max(0, y - x), total and branch-free."""
    return _binary(
        y, x,
        lambda a, b: RatInterval(max(ZERO, a.lo - b.hi), max(ZERO, a.hi - b.lo)),
        lambda p, q: max(ZERO, p - q),
    )


def mul(x: Real, y: Real) -> Real:
    """Product; operand tolerances come from a magnitude pre-query at 1.

    Any later enclosure intersects the pre-query one and has width <= 1, so
    the pre-query bounds plus 1 bound every enclosure actually used.
    """
    if x.exact is not None and y.exact is not None:
        return real_from_rational(x.exact * y.exact)

    def fn(eps: Rat) -> RatInterval:
        ex1 = x.approx(rat(1))
        ey1 = y.approx(rat(1))
        mx = max(abs(ex1.lo), abs(ex1.hi)) + 1
        my = max(abs(ey1.lo), abs(ey1.hi)) + 1
        a = x.approx(eps / (2 * my))
        b = y.approx(eps / (2 * mx))
        return _imul(a, b)

    return Real(fn)


def _imul(a: RatInterval, b: RatInterval) -> RatInterval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return RatInterval(min(products), max(products))


def scale(x: Real, c: RatLike) -> Real:
    """x * c for a known rational c (cheaper than mul by an embedding)."""
    c = rat(c)
    if x.exact is not None:
        return real_from_rational(x.exact * c)
    if c == 0:
        return real_from_rational(0)
    mag = abs(c)

    def fn(eps: Rat) -> RatInterval:
        a = x.approx(eps / mag)
        lo, hi = a.lo * c, a.hi * c
        return RatInterval(min(lo, hi), max(lo, hi))

    return Real(fn)


def separation_bound(x: Real, sep: RatLike) -> Rat:
    """Certify |x| >= something positive, given the caller's claim |x| >= sep.

    The enclosure at sep/2 must exclude 0; the certified bound returned is
    the distance of that enclosure from 0 (signed: negative means x < 0).
    Raises NotSeparatedFromZero when the check enclosure contains 0.
    """
    sep = rat(sep)
    if sep <= 0:
        raise ValueError("separation margin must be positive")
    e = x.approx(sep / 2)
    if e.lo > 0:
        return e.lo
    if e.hi < 0:
        return e.hi
    raise NotSeparatedFromZero(
        f"enclosure {e} at tolerance {sep}/2 contains 0; certificate |x| >= {sep} failed"
    )


def recip(x: Real, sep: RatLike) -> Real:
    """1/x, for x certified away from zero by at least sep."""
    m_signed = separation_bound(x, sep)
    m = abs(m_signed)
    if x.exact is not None:
        return real_from_rational(1 / x.exact)

    def fn(eps: Rat) -> RatInterval:
        delta = min(m / 2, eps * m * m / 4)
        e = x.approx(delta)
        # the enclosure stays on one side of 0: |x| >= m and width <= m/2
        return RatInterval(1 / e.hi, 1 / e.lo)

    return Real(fn)


def compare(x: Real, y: Real, eps: RatLike) -> Apartness:
    """Certified comparison at tolerance eps; never claims a false order."""
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("tolerance must be positive")
    if x.exact is not None and y.exact is not None:
        if x.exact < y.exact:
            return LESS
        if x.exact > y.exact:
            return GREATER
        return indistinguishable(eps)
    a = x.approx(eps / 2)
    b = y.approx(eps / 2)
    if a.hi < b.lo:
        return LESS
    if a.lo > b.hi:
        return GREATER
    return indistinguishable(eps)


def to_decimal(x: Real, digits: int) -> str:
    """Render with the given number of fractional digits, certified.

    The enclosure at 10^-(digits+1) is rounded (half-up on each endpoint);
    when the endpoints round differently the printed last digit may be off
    by one and a trailing "~" flags it.
    """
    if digits < 1:
        raise ValueError("digits must be >= 1")
    scale_ = 10**digits
    e = x.approx(rat(1, 10 ** (digits + 1)))
    n_lo = rat_floor(e.lo * scale_ + rat(1, 2))
    n_hi = rat_floor(e.hi * scale_ + rat(1, 2))
    if n_lo == n_hi:
        return _format_scaled(n_lo, digits)
    n_mid = rat_floor(e.midpoint() * scale_ + rat(1, 2))
    return _format_scaled(n_mid, digits) + "~"


def _format_scaled(n: int, digits: int) -> str:
    n = int(n)
    sign = "-" if n < 0 else ""
    n = abs(n)
    scale_ = 10**digits
    return f"{sign}{n // scale_}.{n % scale_:0{digits}d}"


def to_float(x: Real, eps: RatLike = rat(1, 10**12)) -> float:
    """Convenience float approximation (not certified; for display only)."""
    e = x.approx(eps)
    return float(to_fraction(e.midpoint()))
