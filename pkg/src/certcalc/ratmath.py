"""Rational arithmetic backend.

All certified bounds in this library are exact rationals.  gmpy2's mpq is
used when available (it is several times faster than fractions.Fraction);
otherwise the stdlib Fraction is used.  Both normalize to lowest terms with
a positive denominator, which is the representation invariant we rely on.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

try:
    from gmpy2 import mpq as _mpq

    BACKEND = "gmpy2"

    def _make(num, den):
        return _mpq(num, den)

    _RAT_TYPES = (type(_mpq(0)), Fraction)
except ImportError:  # pragma: no cover - exercised only without gmpy2
    BACKEND = "fractions"

    def _make(num, den):
        return Fraction(num, den)

    _RAT_TYPES = (Fraction,)

#: Anything accepted where a rational is expected.
RatLike = Union[int, str, float, Fraction, "Rat"]

Rat = type(_make(0, 1))

ZERO = _make(0, 1)
ONE = _make(1, 1)


def rat(value: RatLike, den: RatLike | None = None) -> Rat:
    """Coerce to the backend rational type.

    Strings go through Fraction, so "3/4", "0.25" and "1e-6" all parse
    exactly.  Floats are converted exactly (no decimal reinterpretation).
    """
    if den is not None:
        return rat(value) / rat(den)
    if isinstance(value, _RAT_TYPES):
        return _make(value.numerator, value.denominator)
    if isinstance(value, int):
        return _make(value, 1)
    if hasattr(value, "__index__"):  # mpz and other integer-likes
        return _make(value.__index__(), 1)
    if isinstance(value, str):
        f = Fraction(value)
        return _make(f.numerator, f.denominator)
    if isinstance(value, float):
        f = Fraction(value)
        return _make(f.numerator, f.denominator)
    raise TypeError(f"cannot interpret {value!r} as a rational")


def to_fraction(q: RatLike) -> Fraction:
    q = rat(q)
    return Fraction(int(q.numerator), int(q.denominator))


def rat_floor(q) -> int:
    return int(math.floor(q))


def rat_ceil(q) -> int:
    return int(math.ceil(q))


def is_integer(q) -> bool:
    return rat(q).denominator == 1


def fmt(q) -> str:
    """Render as "p/q" (or "p" for integers), for traces and CLI output."""
    q = rat(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def dyadic_between(lo: RatLike, hi: RatLike) -> Rat:
    """A rational with power-of-two denominator strictly inside (lo, hi).

    Used for bisection midpoints: exact midpoints double the denominator at
    every step, while dyadic picks keep it proportional to the current
    bracket width.  The result lies in the middle half of the interval.
    """
    lo, hi = rat(lo), rat(hi)
    if not lo < hi:
        raise ValueError("dyadic_between requires lo < hi")
    width = hi - lo
    k = 0
    step = ONE
    while step * 4 > width:
        step /= 2
        k += 1
    # smallest multiple of 2^-k at or above lo + width/4
    m = rat_ceil((lo + width / 4) * 2**k)
    mid = _make(m, 2**k)
    assert lo < mid < hi
    return mid


def dyadic_round_up(q: RatLike, k: int) -> Rat:
    """Smallest multiple of 2**-k that is >= q."""
    q = rat(q)
    return _make(rat_ceil(q * 2**k), 2**k)
