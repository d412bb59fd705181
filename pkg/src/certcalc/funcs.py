"""Expression trees for real-valued maps on an interval.

Every node supports (i) pointwise evaluation on Reals and (ii) a sound
interval extension on rational intervals: for any rational t in J, the
point value lies inside extension(J).  Nodes that admit one also expose a
slope extension - an interval containing every difference quotient
(f(v) - f(u)) / (v - u) over the box - which yields a centered form
f(mid) + slope * (J - mid).  The centered form is intersected with the
plain extension, keeping enclosures tight on narrow intervals.

The `tol` argument bounds the slack of any Real-valued leaves (constants
given as Reals, and the log/exp/power nodes defined downstream); purely
rational subtrees ignore it.
"""

from __future__ import annotations

from typing import Optional

from .errors import NotSeparatedFromZero
from .ratmath import Rat, RatLike, ZERO, rat
from .reals import RatInterval, Real, real_from_rational
from . import reals

DEFAULT_TOL = rat(1, 2**40)


def _iadd(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(a.lo + b.lo, a.hi + b.hi)


def _ineg(a: RatInterval) -> RatInterval:
    return RatInterval(-a.hi, -a.lo)


def _isub(a: RatInterval, b: RatInterval) -> RatInterval:
    return RatInterval(a.lo - b.hi, a.hi - b.lo)


def _imul(a: RatInterval, b: RatInterval) -> RatInterval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return RatInterval(min(products), max(products))


def _irecip(a: RatInterval) -> RatInterval:
    if a.lo > 0 or a.hi < 0:
        return RatInterval(1 / a.hi, 1 / a.lo)
    raise NotSeparatedFromZero(f"interval {a} contains 0")


def _ihull(a: RatInterval, b: RatInterval) -> RatInterval:
    return a.hull(b)


class RealFunc:
    """Base node: a map evaluable pointwise and by interval extension."""

    def eval(self, x: Real) -> Real:
        raise NotImplementedError

    def extension(self, iv: RatInterval, tol: RatLike = DEFAULT_TOL) -> RatInterval:
        raise NotImplementedError

    def slope_extension(self, iv: RatInterval, tol: RatLike = DEFAULT_TOL) -> Optional[RatInterval]:
        """Interval containing every slope of the map over iv, or None."""
        return None

    def ext(self, iv: RatInterval, tol: RatLike = DEFAULT_TOL) -> RatInterval:
        """Extension tightened by the centered form when a slope is known."""
        plain = self.extension(iv, tol)
        if iv.lo == iv.hi:
            return plain
        s = self.slope_extension(iv, tol)
        if s is None:
            return plain
        m = iv.midpoint()
        fm = self.extension(RatInterval(m, m), tol)
        spread = _imul(s, RatInterval(iv.lo - m, iv.hi - m))
        centered = _iadd(fm, spread)
        return plain.intersection(centered)

    # operator sugar for building trees
    def __add__(self, other):
        return Add(self, _as_func(other))

    def __radd__(self, other):
        return Add(_as_func(other), self)

    def __mul__(self, other):
        return Mul(self, _as_func(other))

    def __rmul__(self, other):
        return Mul(_as_func(other), self)

    def __neg__(self):
        return Neg(self)

    def __sub__(self, other):
        return Add(self, Neg(_as_func(other)))

    def __rsub__(self, other):
        return Add(_as_func(other), Neg(self))


def _as_func(v) -> RealFunc:
    if isinstance(v, RealFunc):
        return v
    return Const(v)


class Const(RealFunc):
    """A constant map; the value may be rational or a Real."""

    __slots__ = ("value", "_rat")

    def __init__(self, value: RatLike | Real):
        if isinstance(value, Real):
            self.value = value
            self._rat = value.exact
        else:
            self._rat = rat(value)
            self.value = real_from_rational(self._rat)

    def eval(self, x: Real) -> Real:
        return self.value

    def extension(self, iv, tol=DEFAULT_TOL):
        if self._rat is not None:
            return RatInterval(self._rat, self._rat)
        return self.value.approx(rat(tol))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        return RatInterval(ZERO, ZERO)

    def __repr__(self):
        return f"Const({self.value!r})"


class Identity(RealFunc):
    __slots__ = ()

    def eval(self, x: Real) -> Real:
        return x

    def extension(self, iv, tol=DEFAULT_TOL):
        return iv

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        return RatInterval(1, 1)

    def __repr__(self):
        return "Identity()"


class Add(RealFunc):
    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return reals.add(self.f.eval(x), self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        return _iadd(self.f.ext(iv, tol), self.g.ext(iv, tol))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        a = self.f.slope_extension(iv, tol)
        b = self.g.slope_extension(iv, tol)
        if a is None or b is None:
            return None
        return _iadd(a, b)


class Neg(RealFunc):
    __slots__ = ("f",)

    def __init__(self, f: RealFunc):
        self.f = f

    def eval(self, x: Real) -> Real:
        return reals.neg(self.f.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        return _ineg(self.f.ext(iv, tol))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        s = self.f.slope_extension(iv, tol)
        return None if s is None else _ineg(s)


class Mul(RealFunc):
    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return reals.mul(self.f.eval(x), self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        return _imul(self.f.ext(iv, tol), self.g.ext(iv, tol))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        # slope of fg over (u, v): slope_f * g(v) + f(u) * slope_g
        sf = self.f.slope_extension(iv, tol)
        sg = self.g.slope_extension(iv, tol)
        if sf is None or sg is None:
            return None
        fe = self.f.ext(iv, tol)
        ge = self.g.ext(iv, tol)
        return _iadd(_imul(sf, ge), _imul(fe, sg))


class TMinus(RealFunc):
    """max(0, f - g): the truncated difference, total on enclosures."""

    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return reals.tminus(self.f.eval(x), self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        d = _isub(self.f.ext(iv, tol), self.g.ext(iv, tol))
        return RatInterval(max(ZERO, d.lo), max(ZERO, d.hi))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        # clamping keeps every slope between 0 and the unclamped slope
        sf = self.f.slope_extension(iv, tol)
        sg = self.g.slope_extension(iv, tol)
        if sf is None or sg is None:
            return None
        d = _isub(sf, sg)
        return RatInterval(min(ZERO, d.lo), max(ZERO, d.hi))


class Min(RealFunc):
    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return reals.rmin(self.f.eval(x), self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        a, b = self.f.ext(iv, tol), self.g.ext(iv, tol)
        return RatInterval(min(a.lo, b.lo), min(a.hi, b.hi))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        sf = self.f.slope_extension(iv, tol)
        sg = self.g.slope_extension(iv, tol)
        if sf is None or sg is None:
            return None
        return _ihull(sf, sg)


class Max(RealFunc):
    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return reals.rmax(self.f.eval(x), self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        a, b = self.f.ext(iv, tol), self.g.ext(iv, tol)
        return RatInterval(max(a.lo, b.lo), max(a.hi, b.hi))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        sf = self.f.slope_extension(iv, tol)
        sg = self.g.slope_extension(iv, tol)
        if sf is None or sg is None:
            return None
        return _ihull(sf, sg)


class Recip(RealFunc):
    """1/f, guarded: the caller certifies |f| >= sep on the working domain."""

    __slots__ = ("f", "sep")

    def __init__(self, f: RealFunc, sep: RatLike):
        self.f = f
        self.sep = rat(sep)
        if self.sep <= 0:
            raise ValueError("separation margin must be positive")

    def eval(self, x: Real) -> Real:
        return reals.recip(self.f.eval(x), self.sep)

    def extension(self, iv, tol=DEFAULT_TOL):
        return _irecip(self.f.ext(iv, tol))

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        sf = self.f.slope_extension(iv, tol)
        if sf is None:
            return None
        fe = self.f.ext(iv, tol)
        return _ineg(_imul(sf, _irecip(_imul(fe, fe))))


class Compose(RealFunc):
    """f after g."""

    __slots__ = ("f", "g")

    def __init__(self, f: RealFunc, g: RealFunc):
        self.f, self.g = f, g

    def eval(self, x: Real) -> Real:
        return self.f.eval(self.g.eval(x))

    def extension(self, iv, tol=DEFAULT_TOL):
        return self.f.ext(self.g.ext(iv, tol), tol)

    def slope_extension(self, iv, tol=DEFAULT_TOL):
        sg = self.g.slope_extension(iv, tol)
        if sg is None:
            return None
        inner = self.g.ext(iv, tol)
        sf = self.f.slope_extension(inner, tol)
        if sf is None:
            return None
        return _imul(sf, sg)


def const(value: RatLike | Real) -> Const:
    return Const(value)


def identity() -> Identity:
    return Identity()


def int_power(f: RealFunc, n: int) -> RealFunc:
    """f**n for integer n >= 0, built by squaring (a pure Mul tree)."""
    if n < 0:
        raise ValueError("int_power takes a non-negative exponent")
    if n == 0:
        return Const(1)
    if n == 1:
        return f
    half = int_power(f, n // 2)
    sq = Mul(half, half)
    return Mul(sq, f) if n % 2 else sq


def polynomial(coeffs) -> RealFunc:
    """Polynomial with rational coefficients, constant term first (Horner)."""
    coeffs = [rat(c) for c in coeffs]
    if not coeffs:
        return Const(0)
    t = Identity()
    acc: RealFunc = Const(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        acc = Add(Mul(acc, t), Const(c))
    return acc
