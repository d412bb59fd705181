"""Finite valuations on compact real intervals.

A valuation here is determined by its values on bounded rational open
intervals; finite disjoint unions are measured by summing over members.
Queries return certified rational lower bounds at a caller-chosen
tolerance, which is all the integration sums ever need.  The two
valuations shipped are the length (Lebesgue) valuation on a carrier
[x, y] and the uniform probability valuation, which stays well defined
when the carrier degenerates to a point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Tuple

from .errors import InvalidIntervalOrder
from .ratmath import Rat, RatLike, ZERO, rat
from .reals import (
    GREATER,
    LESS,
    RatInterval,
    Real,
    compare,
    real_from_rational,
    rmax,
    rmin,
    sub,
    tminus,
)

_CONSTRUCTION_TOL = rat(1, 2**16)


@dataclass(frozen=True)
class OpenSet:
    """Canonical finite union of bounded rational open intervals.

    Members are sorted, pairwise disjoint with non-touching endpoints, and
    non-empty (lo < hi).  Use normalize_union to build one.
    """

    intervals: Tuple[RatInterval, ...]

    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, q: RatLike) -> bool:
        q = rat(q)
        return any(iv.lo < q < iv.hi for iv in self.intervals)

    def total_length(self) -> Rat:
        return sum((iv.width() for iv in self.intervals), ZERO)

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


def normalize_union(raw: Iterable[RatInterval | Tuple[RatLike, RatLike]]) -> OpenSet:
    """Canonicalize a list of open intervals: drop empties, sort, merge.

    Touching intervals (hi_i = lo_{i+1}) are merged as well; the point-free
    union differs from the merged interval only at the touch point, which
    carries no mass for the atomless valuations in scope here.  The result
    is idempotent and preserves membership of every non-endpoint rational.
    """
    items = []
    for entry in raw:
        if not isinstance(entry, RatInterval):
            lo, hi = entry
            if not rat(lo) < rat(hi):
                continue
            entry = RatInterval(lo, hi)
        if entry.lo < entry.hi:
            items.append(entry)
    items.sort(key=lambda iv: (iv.lo, iv.hi))
    merged: list[RatInterval] = []
    for iv in items:
        if merged and iv.lo <= merged[-1].hi:
            if iv.hi > merged[-1].hi:
                merged[-1] = RatInterval(merged[-1].lo, iv.hi)
        else:
            merged.append(iv)
    return OpenSet(tuple(merged))


def open_union(u: OpenSet, v: OpenSet) -> OpenSet:
    return normalize_union(list(u.intervals) + list(v.intervals))


def open_intersection(u: OpenSet, v: OpenSet) -> OpenSet:
    out = []
    for a in u.intervals:
        for b in v.intervals:
            lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
            if lo < hi:
                out.append(RatInterval(lo, hi))
    return normalize_union(out)


def _check_order(x: Real, y: Real) -> None:
    if compare(y, x, _CONSTRUCTION_TOL) is LESS:
        raise InvalidIntervalOrder("carrier upper endpoint certified below lower endpoint")


class Valuation:
    """A finite valuation on a compact carrier [domain_lo, domain_hi].

    measure_of(iv, eps) returns a certified lower bound on the valuation of
    the open interval iv, within eps of the true value whenever that is
    attainable at the refinement budget.  total_mass is the mass of the
    whole carrier as a Real.
    """

    kind = "abstract"

    def __init__(self, domain_lo: Real, domain_hi: Real, total_mass: Real):
        _check_order(domain_lo, domain_hi)
        self.domain_lo = domain_lo
        self.domain_hi = domain_hi
        self.total_mass = total_mass

    def measure_of(self, iv: RatInterval, eps: RatLike) -> Rat:
        raise NotImplementedError

    def measure_open(self, u: OpenSet, eps: RatLike) -> Rat:
        """Lower bound on the measure of a finite disjoint union.

        By modularity the value is the sum over members, so the bound is the
        sum of per-member bounds at eps/len(u).
        """
        eps = rat(eps)
        if u.is_empty():
            return ZERO
        per = eps / len(u)
        return sum((self.measure_of(iv, per) for iv in u.intervals), ZERO)

    def total_mass_upper(self, eps: RatLike) -> Rat:
        return self.total_mass.approx(rat(eps)).hi

    def carrier_box(self, pad_tol: RatLike) -> RatInterval:
        """A rational interval certified to contain the carrier."""
        pad_tol = rat(pad_tol)
        lo = self.domain_lo.approx(pad_tol).lo
        hi = self.domain_hi.approx(pad_tol).hi
        if lo > hi:
            # possible only for a degenerate carrier queried asymmetrically
            lo, hi = hi, lo
        return RatInterval(lo, hi)

    def exact_bounds(self) -> Optional[Tuple[Rat, Rat]]:
        """Carrier endpoints as exact rationals, when known."""
        if self.domain_lo.exact is not None and self.domain_hi.exact is not None:
            return (self.domain_lo.exact, self.domain_hi.exact)
        return None


class LebesgueValuation(Valuation):
    """Length measure of the part of an interval inside the carrier:
    the value on (a, b) is min(b, y) truncated-minus max(a, x)."""

    kind = "lebesgue"

    def __init__(self, x: Real, y: Real):
        super().__init__(x, y, tminus(y, x))

    def value_real(self, iv: RatInterval) -> Real:
        b = real_from_rational(iv.hi)
        a = real_from_rational(iv.lo)
        return tminus(rmin(b, self.domain_hi), rmax(a, self.domain_lo))

    def measure_of(self, iv: RatInterval, eps: RatLike) -> Rat:
        exact = self.exact_bounds()
        if exact is not None:
            x, y = exact
            return max(ZERO, min(iv.hi, y) - max(iv.lo, x))
        return self.value_real(iv).approx(rat(eps)).lo


class UniformValuation(Valuation):
    """The probability valuation with (y - x) * value = Lebesgue value.

    Two certification routes are combined at every query, mirroring the
    case-free definition: a quotient bound q with q*(y-x) below the
    Lebesgue value, and the carrier-inside test (a < x <= y < b) which
    certifies the value 1 outright.  No branch on x = y is ever taken, so
    the degenerate carrier works like any other.
    """

    kind = "uniform"

    _MAX_REFINES = 80

    def __init__(self, x: Real, y: Real):
        super().__init__(x, y, real_from_rational(1))
        self._leb = LebesgueValuation(x, y)

    def measure_of(self, iv: RatInterval, eps: RatLike) -> Rat:
        eps = rat(eps)
        a, b = iv.lo, iv.hi
        exact = self.exact_bounds()
        if exact is not None:
            x, y = exact
            if a < x and y < b:
                return rat(1)
            if x < y:
                lam = max(ZERO, min(b, y) - max(a, x))
                return lam / (y - x)
            return ZERO
        x, y = self.domain_lo, self.domain_hi
        diff = sub(y, x)
        best = ZERO
        delta = eps
        for _ in range(self._MAX_REFINES):
            ex = x.approx(delta)
            ey = y.approx(delta)
            if a < ex.lo and ey.hi < b:
                return rat(1)
            d = diff.approx(delta)
            lam = self._leb.value_real(iv).approx(delta)
            if d.hi > 0:
                q = lam.lo / d.hi
                if q > best:
                    best = q
                if d.lo > 0 and 2 * delta / d.lo <= eps:
                    return best
            delta /= 2
        return best  # refinement budget out; still a sound lower bound


def lebesgue(x: Real | RatLike, y: Real | RatLike) -> LebesgueValuation:
    """Length valuation on the carrier [x, y] (x <= y, checked)."""
    return LebesgueValuation(_as_real(x), _as_real(y))


def uniform(x: Real | RatLike, y: Real | RatLike) -> UniformValuation:
    """Uniform probability valuation on [x, y]; total mass 1 even at x = y."""
    return UniformValuation(_as_real(x), _as_real(y))


def _as_real(v) -> Real:
    if isinstance(v, Real):
        return v
    return real_from_rational(v)


@dataclass(frozen=True)
class Covaluation:
    """Complement of a finite valuation: measures closed complements.

    The value on an open U is total mass minus the valuation of U, computed
    as a certified upper bound (mass upper endpoint minus a lower bound on
    the valuation).  The whole carrier gets 0 and the empty set gets the
    total mass.
    """

    base: Valuation

    def co_measure(self, u: OpenSet, eps: RatLike) -> Rat:
        eps = rat(eps)
        mass_hi = self.base.total_mass_upper(eps / 2)
        return mass_hi - self.base.measure_open(u, eps / 2)


def complement(mu: Valuation) -> Covaluation:
    return Covaluation(mu)
