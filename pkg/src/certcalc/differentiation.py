"""Slope-map calculus.

A differentiable map f carries a two-argument slope with the defining
identity f(y) - f(x) = (y - x) * slope(x, y); the derivative is the
diagonal slope(x, x).  Slopes compose by the usual rules (sum, product,
reciprocal, chain, inverse function), and - the route that matters here -
the slope of an indefinite integral of g is the integral of g against the
uniform valuation on [min(x, y), max(x, y)], which stays defined at x = y
and then evaluates to g(x).

Slope evaluation returns a Real, so every downstream consumer can query it
at whatever tolerance it needs.
"""

from __future__ import annotations

from typing import Callable, Optional

from .errors import BudgetExhausted
from .funcs import Add, Compose, Const, Identity, Mul, Neg, RealFunc, Recip, _imul
from .integration import Enclosure, integrate, integrate_oriented
from .ratmath import Rat, RatLike, rat
from .reals import RatInterval, Real, real_from_rational, rmax, rmin
from . import reals
from .valuations import uniform


class Slope:
    """A slope map together with the function it is the slope of."""

    __slots__ = ("for_func", "_eval")

    def __init__(self, for_func: RealFunc, eval_fn: Callable[[Real, Real], Real]):
        self.for_func = for_func
        self._eval = eval_fn

    def eval(self, x: Real | RatLike, y: Real | RatLike) -> Real:
        return self._eval(_as_real(x), _as_real(y))

    def derivative_at(self, x: Real | RatLike) -> Real:
        x = _as_real(x)
        return self._eval(x, x)


def _as_real(v) -> Real:
    return v if isinstance(v, Real) else real_from_rational(v)


def slope_const(c: RatLike | Real) -> Slope:
    """Slope of a constant map: identically 0."""
    zero = real_from_rational(0)
    return Slope(Const(c), lambda x, y: zero)


def slope_id() -> Slope:
    """Slope of the identity: identically 1."""
    one = real_from_rational(1)
    return Slope(Identity(), lambda x, y: one)


def slope_add(s: Slope, t: Slope) -> Slope:
    return Slope(
        Add(s.for_func, t.for_func),
        lambda x, y: reals.add(s.eval(x, y), t.eval(x, y)),
    )


def slope_neg(s: Slope) -> Slope:
    return Slope(Neg(s.for_func), lambda x, y: reals.neg(s.eval(x, y)))


def slope_scale(s: Slope, c: RatLike | Real) -> Slope:
    """Slope of c*f: the product rule with a constant factor collapses."""
    c_real = _as_real(c)
    return Slope(
        Mul(Const(c_real), s.for_func),
        lambda x, y: reals.mul(c_real, s.eval(x, y)),
    )


def slope_mul(s: Slope, t: Slope) -> Slope:
    """Product rule: slope_f(x,y) * g(y) + f(x) * slope_g(x,y)."""
    f, g = s.for_func, t.for_func

    def ev(x: Real, y: Real) -> Real:
        return reals.add(
            reals.mul(s.eval(x, y), g.eval(y)),
            reals.mul(f.eval(x), t.eval(x, y)),
        )

    return Slope(Mul(f, g), ev)


def slope_recip(s: Slope, sep: RatLike) -> Slope:
    """Reciprocal rule: -slope_f(x,y) / (f(x) f(y)), with |f| >= sep certified."""
    sep = rat(sep)
    f = s.for_func

    def ev(x: Real, y: Real) -> Real:
        denom = reals.mul(f.eval(x), f.eval(y))
        return reals.neg(reals.mul(s.eval(x, y), reals.recip(denom, sep * sep)))

    return Slope(Recip(f, sep), ev)


def slope_chain(s_outer: Slope, s_inner: Slope) -> Slope:
    """Chain rule: slope_f(g(x), g(y)) * slope_g(x, y)."""
    g = s_inner.for_func

    def ev(x: Real, y: Real) -> Real:
        return reals.mul(s_outer.eval(g.eval(x), g.eval(y)), s_inner.eval(x, y))

    return Slope(Compose(s_outer.for_func, g), ev)


def slope_inverse(s: Slope, g: RealFunc, sep: RatLike) -> Slope:
    """Slope of the inverse map g of f: 1 / slope_f(g(x), g(y)).

    Requires the slope of f to be bounded away from 0 (by sep) wherever it
    is evaluated; the certificate is checked as in the reciprocal.
    """
    sep = rat(sep)

    def ev(x: Real, y: Real) -> Real:
        return reals.recip(s.eval(g.eval(x), g.eval(y)), sep)

    return Slope(g, ev)


class AntiderivativeFunc(RealFunc):
    """t -> integral of g from base_point to t, as an expression node.

    The extension hulls the endpoint values and widens by the integrand
    bound times the interval width, which is sound for any g; the slope
    extension is just the extension of g (the slope of an antiderivative
    over J is an integral of g against a probability valuation on J).
    """

    __slots__ = ("g", "base_point", "eps_hint")

    def __init__(self, g: RealFunc, base_point: RatLike = 0, eps_hint: RatLike = "1/4096"):
        self.g = g
        self.base_point = rat(base_point)
        self.eps_hint = rat(eps_hint)

    def eval(self, x: Real) -> Real:
        base = real_from_rational(self.base_point)

        def fn(eps: Rat) -> RatInterval:
            enc = integrate_oriented(self.g, base, x, eps)
            if enc.budget_exhausted and enc.width() > eps:
                raise BudgetExhausted("antiderivative enclosure too wide", best=enc)
            return enc.interval()

        return Real(fn)

    def extension(self, iv: RatInterval, tol: RatLike = None) -> RatInterval:
        tol = self.eps_hint if tol is None else min(rat(tol), self.eps_hint)
        lo_v = self.eval(real_from_rational(iv.lo)).approx(tol)
        hi_v = self.eval(real_from_rational(iv.hi)).approx(tol)
        hull = lo_v.hull(hi_v)
        ge = self.g.ext(iv, tol)
        reach = max(abs(ge.lo), abs(ge.hi)) * iv.width()
        return RatInterval(hull.lo - reach, hull.hi + reach)

    def slope_extension(self, iv: RatInterval, tol: RatLike = None) -> Optional[RatInterval]:
        tol = self.eps_hint if tol is None else rat(tol)
        return self.g.ext(iv, tol)


def slope_from_integral(g: RealFunc, base_point: RatLike = 0) -> Slope:
    """The slope of x -> integral of g from base_point to x.

    Evaluated as the integral of g against the uniform valuation on
    [min(x, y), max(x, y)]; at x = y this is g(x), so the diagonal gives
    the derivative g without any case split on the arguments.
    """

    def ev(x: Real, y: Real) -> Real:
        lo, hi = rmin(x, y), rmax(x, y)

        def fn(eps: Rat) -> RatInterval:
            enc = integrate(g, uniform(lo, hi), eps)
            if enc.budget_exhausted and enc.width() > eps:
                raise BudgetExhausted("slope enclosure too wide", best=enc)
            return enc.interval()

        return Real(fn)

    return Slope(AntiderivativeFunc(g, base_point), ev)


def derivative(s: Slope, x: Real | RatLike, eps: RatLike) -> Enclosure:
    """Enclosure of the derivative at x: the diagonal slope value."""
    iv = s.derivative_at(x).approx(rat(eps))
    return Enclosure(iv.lo, iv.hi)


def slope_of_func(f: RealFunc, box: RatInterval, tol: RatLike = "1/4096") -> Slope:
    """Build the slope of an expression tree by the combinator rules.

    The working box certifies the reciprocal guards; min/max/truncated
    nodes are rejected (they are only piecewise differentiable).
    """
    tol = rat(tol)
    if isinstance(f, Const):
        return slope_const(f.value)
    if isinstance(f, Identity):
        return slope_id()
    if isinstance(f, Add):
        return slope_add(slope_of_func(f.f, box, tol), slope_of_func(f.g, box, tol))
    if isinstance(f, Neg):
        return slope_neg(slope_of_func(f.f, box, tol))
    if isinstance(f, Mul):
        return slope_mul(slope_of_func(f.f, box, tol), slope_of_func(f.g, box, tol))
    if isinstance(f, Recip):
        inner = f.f.ext(box, tol)
        if inner.lo > 0:
            sep = inner.lo
        elif inner.hi < 0:
            sep = -inner.hi
        else:
            from .errors import NotSeparatedFromZero

            raise NotSeparatedFromZero(
                "reciprocal argument not separated from 0 on the working box"
            )
        return slope_recip(slope_of_func(f.f, box, tol), sep)
    if isinstance(f, Compose):
        inner_box = f.g.ext(box, tol)
        return slope_chain(
            slope_of_func(f.f, inner_box, tol), slope_of_func(f.g, box, tol)
        )
    if isinstance(f, AntiderivativeFunc):
        return slope_from_integral(f.g, f.base_point)
    if hasattr(f, "slope"):  # elementary nodes provide their own
        return f.slope(box, tol)
    raise ValueError(f"no slope rule for {type(f).__name__}")
