"""Two-sided integrals as certified rational enclosures.

The primary engine partitions the *range* of a non-negative integrand by an
arithmetic progression of rational levels and forms

    lower sum:  sum_i (r_i - r_{i-1}) * (lower bound on mu{f > r_i})
    upper sum:  sum_i (r_i - r_{i-1}) * (mass upper - lower bound on mu{f < r_{i-1}})

Both sums consume only lower bounds on measures of open sets, so inner
approximation by finite unions of bisection leaves suffices; the upper sum
is sound once its top level certifiably exceeds the supremum of the
integrand.  The pair [lower, upper] brackets the integral and the level
spacing controls the inherent gap, which is how `integrate` schedules its
partition to hit a requested enclosure width.

Signed integrands are split into positive and negative parts; oriented
integrals over [x, y] apply the orientation as a total rule that stays
sound when x and y are indistinguishable.  A Darboux-style domain
partition bracket is provided purely as an independent cross-check oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

from . import _engine
from .errors import LevelsTooLow
from .funcs import Const, Neg, RealFunc, TMinus
from .ratmath import ONE, Rat, RatLike, ZERO, dyadic_round_up, fmt, rat, rat_ceil
from .reals import RatInterval, Real, compare, real_from_rational, rmax, rmin
from .valuations import Valuation, lebesgue


@dataclass(frozen=True)
class Partition:
    """Strictly increasing rational levels 0 = r_0 < r_1 < ... < r_n."""

    levels: Tuple[Rat, ...]

    def __post_init__(self):
        levels = tuple(rat(r) for r in self.levels)
        object.__setattr__(self, "levels", levels)
        if len(levels) < 2:
            raise ValueError("a partition needs at least one positive level")
        if levels[0] != 0:
            raise ValueError("partitions start at 0")
        for a, b in zip(levels, levels[1:]):
            if not a < b:
                raise ValueError("levels must be strictly increasing")

    @classmethod
    def arithmetic(cls, top: RatLike, n: int) -> "Partition":
        top = rat(top)
        if n < 1 or top <= 0:
            raise ValueError("need n >= 1 and top > 0")
        return cls(tuple(top * i / n for i in range(n + 1)))

    @property
    def top(self) -> Rat:
        return self.levels[-1]

    def refine_with(self, other: "Partition") -> "Partition":
        return Partition(tuple(sorted(set(self.levels) | set(other.levels))))

    def __len__(self):
        return len(self.levels) - 1


@dataclass
class Enclosure:
    """A certified rational bracket [lo, hi] around the exact value."""

    lo: Rat
    hi: Rat
    trace: Optional[dict] = None
    budget_exhausted: bool = False

    def __post_init__(self):
        self.lo = rat(self.lo)
        self.hi = rat(self.hi)
        if self.lo > self.hi:
            raise ValueError("enclosure endpoints out of order")

    def width(self) -> Rat:
        return self.hi - self.lo

    def midpoint(self) -> Rat:
        return (self.lo + self.hi) / 2

    def contains(self, q: RatLike) -> bool:
        q = rat(q)
        return self.lo <= q <= self.hi

    def intersects(self, other: "Enclosure") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def interval(self) -> RatInterval:
        return RatInterval(self.lo, self.hi)

    def __repr__(self):
        return f"Enclosure[{self.lo}, {self.hi}]"


def _as_real(v) -> Real:
    return v if isinstance(v, Real) else real_from_rational(v)


def _hull_box(x: Real, y: Real, tol: Rat) -> RatInterval:
    ex = x.approx(tol)
    ey = y.approx(tol)
    return RatInterval(min(ex.lo, ey.lo), max(ex.hi, ey.hi))


def sup_bound(f: RealFunc, x: Real | RatLike, y: Real | RatLike, eps: RatLike,
              max_splits: int = 4000) -> Rat:
    """Rational B with sup f <= B on [x, y], and B <= sup + eps when the
    refinement budget allows certification (it always stays an upper bound).

    The bound is over a rational box enclosing [x, y]; for rational
    endpoints that box is [x, y] itself.
    """
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, y = _as_real(x), _as_real(y)
    box = _hull_box(x, y, eps / 4)
    bound, _certified = _engine.sup_on_box(f, box, eps, max_splits=max_splits)
    return bound


def superlevel_lb(f: RealFunc, mu: Valuation, r: RatLike, eps: RatLike,
                  max_splits: int = 4000) -> Rat:
    """Certified lower bound on mu{t : f(t) > r}, within eps when attainable.

    Adaptive bisection of the carrier collects subintervals whose extension
    lower endpoint exceeds r into an open union, which is then measured.
    On budget exhaustion the best still-sound bound found is returned.
    """
    bound, _cert, _u = _engine.level_set_lb(f, mu, rat(r), rat(eps), "super",
                                            max_splits=max_splits)
    return bound


def sublevel_lb(f: RealFunc, mu: Valuation, r: RatLike, eps: RatLike,
                max_splits: int = 4000) -> Rat:
    """Certified lower bound on mu{t : f(t) < r}; mirror of superlevel_lb."""
    bound, _cert, _u = _engine.level_set_lb(f, mu, rat(r), rat(eps), "sub",
                                            max_splits=max_splits)
    return bound


def _require_nonneg(f: RealFunc, mu: Valuation, eps: Rat) -> None:
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    e = f.ext(box, eps / 8)
    if e.lo < 0:
        raise ValueError(
            "integrand not certified non-negative on the carrier box; "
            "wrap it in a truncated difference or use integrate_signed"
        )


def lower_sum(f: RealFunc, mu: Valuation, p: Partition, eps: RatLike,
              max_splits: int = 4000) -> Rat:
    """The range-partition lower sum with measure slack at most eps.

    Requires f certified non-negative on the carrier box.  The result is a
    sound lower bound on the integral for any partition.
    """
    eps = rat(eps)
    _require_nonneg(f, mu, eps)
    per_level = eps / p.top
    total = ZERO
    for prev, cur in zip(p.levels, p.levels[1:]):
        total += (cur - prev) * superlevel_lb(f, mu, cur, per_level, max_splits)
    return total


def upper_sum(f: RealFunc, mu: Valuation, p: Partition, eps: RatLike,
              max_splits: int = 4000) -> Rat:
    """The complement-measure upper sum; sound upper bound on the integral.

    The top level must certifiably exceed the supremum of f on the carrier
    (checked through sup_bound); otherwise LevelsTooLow is raised.
    """
    eps = rat(eps)
    _require_nonneg(f, mu, eps)
    sup_eps = (p.levels[-1] - p.levels[-2]) / 2
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    b, _ = _engine.sup_on_box(f, box, sup_eps, max_splits=max_splits)
    if p.top <= b:
        raise LevelsTooLow(
            f"top level {p.top} does not certifiably exceed the supremum bound {b}"
        )
    mass_hi = mu.total_mass_upper(eps / (2 * p.top))
    per_level = eps / (2 * p.top)
    total = ZERO
    for prev, cur in zip(p.levels, p.levels[1:]):
        total += (cur - prev) * (mass_hi - sublevel_lb(f, mu, prev, per_level, max_splits))
    return total


_SCALAR_LEAF_CAP = 1 << 16
_GRID_LEAF_CAP = 1 << 23


def integrate(f: RealFunc, mu: Valuation, eps: RatLike, *,
              max_leaves: Optional[int] = None, want_trace: bool = False) -> Enclosure:
    """Enclosure [lower sum, upper sum] of width <= eps for f >= 0.

    The scheduler picks the arithmetic range partition from the proof-side
    bound: top level just above the supremum, and enough levels that the
    inherent gap 2*r_1*mass is at most eps/2; the rest of the budget goes
    to extension and measure slack.  A shared domain refinement then
    evaluates both sums at once (see _engine).  If non-negativity cannot
    be certified from the interval extension, the signed decomposition is
    used transparently so the result stays correct for any integrand.

    On budget exhaustion the enclosure is widened, never unsound, and
    flagged via ``budget_exhausted``.
    """
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    e0 = f.ext(box, eps / 8)
    if e0.lo < 0:
        return integrate_signed(f, mu, eps, max_leaves=max_leaves, want_trace=want_trace)
    return _integrate_nonneg(f, mu, eps, box, max_leaves, want_trace)


def _integrate_nonneg(f: RealFunc, mu: Valuation, eps: Rat, box: RatInterval,
                      max_leaves: Optional[int], want_trace: bool) -> Enclosure:
    sup_eps = max(eps, rat(1, 1024))
    b, _ = _engine.sup_on_box(f, box, sup_eps)
    mass_hi = mu.total_mass_upper(eps / 16)
    if mass_hi <= 0:
        return Enclosure(ZERO, ZERO, trace={"n": 0, "leaves": 0} if want_trace else None)
    # level step: a power of two with 2*r1*mass <= eps/2, so the inherent
    # discretization gap uses at most half the width budget
    r1 = ONE
    while 2 * r1 * mass_hi > eps / 2:
        r1 /= 2
    n = max(1, rat_ceil((b + sup_eps) / r1))
    rn = r1 * n
    ext_tol = eps / (16 * max(mass_hi, ONE))
    meas_tol = eps / (8 * max(rn, ONE))

    plan = _engine.lane_plan(f, mu, box, ext_tol)
    leaf_cap = max_leaves if max_leaves is not None else (
        _GRID_LEAF_CAP if plan is not None else _SCALAR_LEAF_CAP
    )

    def run(m):
        if plan is not None:
            res = _engine.lane_sweep(plan, mu, box, r1, n, m)
            if res is not None:
                return res
        return _engine.scalar_sweep(f, mu, box, r1, n, m, ext_tol, meas_tol)

    m = 256
    best = run(m)
    rounds = 0
    while best.upper - best.lower > eps and rounds < 8:
        gap = best.upper - best.lower
        floor_gap = eps / 2
        scale_up = rat_ceil(2 * (gap - floor_gap) / max(eps - floor_gap, eps / 4))
        m = min(max(m * max(2, scale_up), m * 2), leaf_cap)
        nxt = run(m)
        if nxt.upper - nxt.lower < best.upper - best.lower:
            best = nxt
        if m >= leaf_cap:
            break
        rounds += 1

    lower = max(best.lower, ZERO)
    upper = max(best.upper, lower)
    flagged = (upper - lower) > eps
    trace = None
    if want_trace:
        trace = {
            "levels_top": fmt(rn),
            "n_levels": int(n),
            "leaves": best.leaves,
            "lane": best.lane,
            "lower_sum": fmt(lower),
            "upper_sum": fmt(upper),
        }
    return Enclosure(lower, upper, trace=trace, budget_exhausted=flagged)


def integrate_signed(f: RealFunc, mu: Valuation, eps: RatLike, *,
                     max_leaves: Optional[int] = None, want_trace: bool = False) -> Enclosure:
    """Integral of a signed integrand via the split f = f_plus - f_minus,
    each part truncated at zero and integrated to eps/2."""
    eps = rat(eps)
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    e0 = f.ext(box, eps / 8)
    if e0.lo >= 0:
        return _integrate_nonneg(f, mu, eps, box, max_leaves, want_trace)
    if e0.hi <= 0:
        inner = _integrate_nonneg(Neg(f), mu, eps, box, max_leaves, want_trace)
        return Enclosure(-inner.hi, -inner.lo, trace=inner.trace,
                         budget_exhausted=inner.budget_exhausted)
    zero = Const(0)
    plus = _integrate_nonneg(TMinus(f, zero), mu, eps / 2, box, max_leaves, False)
    minus = _integrate_nonneg(TMinus(Neg(f), zero), mu, eps / 2, box, max_leaves, False)
    return Enclosure(
        plus.lo - minus.hi,
        plus.hi - minus.lo,
        budget_exhausted=plus.budget_exhausted or minus.budget_exhausted,
    )


def integrate_oriented(f: RealFunc, x: Real | RatLike, y: Real | RatLike,
                       eps: RatLike, *, max_leaves: Optional[int] = None) -> Enclosure:
    """Oriented integral over [x, y] for arbitrary x, y.

    The magnitude is the signed integral over [min(x,y), max(x,y)]; the
    orientation is applied as a total rule: the certified order picks the
    sign, and if x and y are indistinguishable at the working tolerance the
    hull of both signs is returned, which is sound because the true value
    is then within the hull's reach of 0.
    """
    eps = rat(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    x, y = _as_real(x), _as_real(y)
    lo_r, hi_r = rmin(x, y), rmax(x, y)
    box = _hull_box(lo_r, hi_r, min(eps, ONE) / 4)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    e = f.ext(box, rat(1, 4))
    mag = max(abs(e.lo), abs(e.hi), ONE)
    eps_cmp = eps / (8 * mag)
    body = integrate_signed(f, lebesgue(lo_r, hi_r), eps / 4, max_leaves=max_leaves)
    order = compare(x, y, eps_cmp)
    if order.is_less:
        return body
    if order.is_greater:
        return Enclosure(-body.hi, -body.lo, budget_exhausted=body.budget_exhausted)
    bound = max(abs(body.lo), abs(body.hi))
    return Enclosure(-bound, bound, budget_exhausted=body.budget_exhausted)


def darboux_oracle(f: RealFunc, x: RatLike, y: RatLike, n: int) -> Tuple[Rat, Rat]:
    """Domain-partition bracket (sum of inf*dx, sum of sup*dx) over n equal
    cells, using the plain first-order interval extension only.

    This is the independent cross-check for the range-partition engine: for
    any sound extension the pair brackets the true integral.
    """
    x, y = rat(x), rat(y)
    if n < 1:
        raise ValueError("n must be >= 1")
    if x > y:
        raise ValueError("darboux_oracle needs x <= y")
    dx = (y - x) / n
    if dx == 0:
        return ZERO, ZERO
    tol = max(dx / 8, rat(1, 2**40))
    lo_sum = ZERO
    hi_sum = ZERO
    t = x
    for _ in range(n):
        nxt = t + dx
        e = f.extension(RatInterval(t, nxt), tol)
        lo_sum += e.lo * dx
        hi_sum += e.hi * dx
        t = nxt
    return lo_sum, hi_sum


def staircase_trace(f: RealFunc, mu: Valuation, n: int, eps: RatLike,
                    top: Optional[RatLike] = None) -> dict:
    """Per-level data of the two range-partition sums at a small n.

    The JSON-ready dict mirrors what the sums actually consumed: the levels,
    the per-level superlevel measure bounds (for the lower sum) and the
    sublevel measure bounds (for the upper sum, taken at the previous
    level), plus the two sums themselves.  Rationals render as "p/q".
    """
    eps = rat(eps)
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)
    if top is None:
        b, _ = _engine.sup_on_box(f, box, max(eps, rat(1, 1024)))
        top = dyadic_round_up(b + max(eps, rat(1, 1024)), 20)
    p = Partition.arithmetic(top, n)
    per_level = eps / p.top
    mass_hi = mu.total_mass_upper(per_level)
    supers = []
    subs = []
    lower = ZERO
    upper = ZERO
    for prev, cur in zip(p.levels, p.levels[1:]):
        s_up = superlevel_lb(f, mu, cur, per_level)
        s_dn = sublevel_lb(f, mu, prev, per_level)
        supers.append(s_up)
        subs.append(s_dn)
        lower += (cur - prev) * s_up
        upper += (cur - prev) * (mass_hi - s_dn)
    return {
        "levels": [fmt(r) for r in p.levels],
        "superlevel_bounds": [fmt(v) for v in supers],
        "sublevel_bounds": [fmt(v) for v in subs],
        "lower_sum": fmt(lower),
        "upper_sum": fmt(upper),
    }
