"""Internal engines behind the integration module.

Three pieces live here:

* a branch-and-bound supremum bound over a rational box;
* an adaptive level-set measurer (inner approximation of superlevel and
  sublevel sets by finite unions of bisection leaves);
* the fused range-partition sweep used by `integrate`: one shared domain
  refinement evaluates the lower and upper sums of an arithmetic range
  partition without iterating its (possibly millions of) levels, by
  counting per leaf how many levels sit below/above its extension.

The sweep has two lanes.  The scalar lane works on exact rationals and
supports every node.  The grid lane vectorizes with numpy int64 in exact
outward-rounded fixed point at a power-of-two scale S; a pre-flight
analysis proves magnitude bounds (no int64 overflow) and accounts for the
1/S rounding slack, rejecting anything it cannot prove, in which case the
scalar lane runs instead.  Both lanes produce sound rational bounds; the
lanes differ only in speed and in how much outward slack they add.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotSeparatedFromZero
from .funcs import (
    Add,
    Compose,
    Const,
    Identity,
    Max,
    Min,
    Mul,
    Neg,
    RealFunc,
    Recip,
    TMinus,
)
from .ratmath import ONE, Rat, ZERO, rat, rat_ceil, rat_floor
from .reals import RatInterval
from .valuations import OpenSet, Valuation, normalize_union

_counter = itertools.count()


# ---------------------------------------------------------------------------
# supremum over a box


def sup_on_box(f: RealFunc, box: RatInterval, eps: Rat, max_splits: int = 4000):
    """Upper bound B on f over box with B <= sup + eps when certified.

    Returns (B, certified).  B is always a sound upper bound; certification
    can fail only by exhausting the split budget (plateaus, huge boxes).
    """
    tol = eps / 8
    e = f.ext(box, tol)
    witness = e.lo
    heap = [(-e.hi, next(_counter), box)]
    splits = 0
    while heap:
        nub, _, iv = heapq.heappop(heap)
        ub = -nub
        if ub - witness <= eps:
            return ub, True
        if splits >= max_splits or iv.width() == 0:
            heapq.heappush(heap, (nub, next(_counter), iv))
            return -heap[0][0], False
        m = iv.midpoint()
        for half in (RatInterval(iv.lo, m), RatInterval(m, iv.hi)):
            he = f.ext(half, tol)
            if he.lo > witness:
                witness = he.lo
            heapq.heappush(heap, (-he.hi, next(_counter), half))
        splits += 1
    return witness, True  # unreachable for non-empty boxes


# ---------------------------------------------------------------------------
# adaptive level-set measurement


def level_set_lb(
    f: RealFunc,
    mu: Valuation,
    r: Rat,
    eps: Rat,
    mode: str,
    max_splits: int = 4000,
):
    """Certified lower bound on mu of a level set, within eps when attainable.

    mode "super" measures {t : f(t) > r}; mode "sub" measures {t : f(t) < r}.
    Bisection leaves whose extension certifies membership are collected into
    an inner open union U; leaves certified in the complement form V.  The
    bound is a measured lower bound of U; it is within eps of the true value
    once (mass_hi - mu(V)) - mu(U) <= eps, which the loop works toward until
    the split budget runs out.

    Returns (bound, certified, collected_open_set).
    """
    if mode not in ("super", "sub"):
        raise ValueError("mode must be 'super' or 'sub'")
    tol = eps / 8
    box = mu.carrier_box(min(eps, ONE) / 16)
    if box.width() == 0:
        pad = min(eps, ONE) / 16
        box = RatInterval(box.lo - pad, box.hi + pad)

    in_u: list[RatInterval] = []
    in_v: list[RatInterval] = []
    pending: list = []

    def classify(iv: RatInterval):
        e = f.ext(iv, tol)
        if mode == "super":
            if e.lo > r:
                in_u.append(iv)
            elif e.hi <= r:
                in_v.append(iv)
            else:
                heapq.heappush(pending, (-iv.width(), next(_counter), iv))
        else:
            if e.hi < r:
                in_u.append(iv)
            elif e.lo >= r:
                in_v.append(iv)
            else:
                heapq.heappush(pending, (-iv.width(), next(_counter), iv))

    classify(box)
    mass_hi = mu.total_mass_upper(eps / 8)
    splits = 0
    check_every = 32
    since_check = check_every  # force an immediate first check

    best = ZERO
    while True:
        if since_check >= check_every or not pending:
            u_set = normalize_union(in_u)
            bound = mu.measure_open(u_set, eps / 4)
            if bound > best:
                best = bound
            v_bound = mu.measure_open(normalize_union(in_v), eps / 4)
            if (mass_hi - v_bound) - bound <= eps:
                return max(best, ZERO), True, u_set
            since_check = 0
        if not pending or splits >= max_splits:
            u_set = normalize_union(in_u)
            bound = mu.measure_open(u_set, eps / 4)
            return max(best, bound, ZERO), False, u_set
        _, _, iv = heapq.heappop(pending)
        m = iv.midpoint()
        classify(RatInterval(iv.lo, m))
        classify(RatInterval(m, iv.hi))
        splits += 1
        since_check += 1


# ---------------------------------------------------------------------------
# fused range-partition sweep: shared helpers


def _count_below(v: Rat, r1: Rat, n: int) -> int:
    """#{i in [1, n] : i*r1 < v}."""
    k = rat_ceil(v / r1) - 1
    if k < 0:
        return 0
    return n if k > n else k


def _count_above(v: Rat, r1: Rat, n: int) -> int:
    """#{j in [0, n-1] : j*r1 > v}."""
    c = (n - 1) - rat_floor(v / r1)
    if c < 0:
        return 0
    return n if c > n else c


@dataclass
class SweepResult:
    lower: Rat
    upper: Rat
    leaves: int
    lane: str


def scalar_sweep(
    f: RealFunc,
    mu: Valuation,
    box: RatInterval,
    r1: Rat,
    n: int,
    m_leaves: int,
    ext_tol: Rat,
    meas_tol: Rat,
) -> SweepResult:
    """Exact-rational fused sweep over a uniform grid of m_leaves cells.

    Consecutive cells with identical level counts are merged into runs and
    measured as single intervals; this keeps measure queries rare and lets
    a degenerate (point-mass-like) uniform carrier sit inside a run instead
    of on a cell boundary.
    """
    rn = r1 * n
    w = box.width() / m_leaves
    box_len = box.width()

    lower_acc = ZERO
    upper_acc = ZERO  # sum of mass * count_above, to be subtracted

    run_lo = box.lo
    run_kc: Optional[tuple] = None
    x = box.lo

    def flush(run_hi):
        nonlocal lower_acc, upper_acc
        if run_kc is None:
            return
        k, c = run_kc
        if k == 0 and c == 0:
            return
        delta = meas_tol * (run_hi - run_lo) / box_len
        mass = mu.measure_of(RatInterval(run_lo, run_hi), delta)
        if mass < 0:
            mass = ZERO
        lower_acc += mass * k
        upper_acc += mass * c

    for _ in range(m_leaves):
        nxt = x + w
        e = f.ext(RatInterval(x, nxt), ext_tol)
        kc = (_count_below(e.lo, r1, n), _count_above(e.hi, r1, n))
        if kc != run_kc:
            flush(x)
            run_lo = x
            run_kc = kc
        x = nxt
    flush(box.hi)

    mass_hi = mu.total_mass_upper(meas_tol)
    lower = r1 * lower_acc
    upper = rn * mass_hi - r1 * upper_acc
    return SweepResult(lower, upper, m_leaves, "scalar")


# ---------------------------------------------------------------------------
# grid lane: exact int64 fixed-point evaluation

_INT64_CAP = 1 << 61


class _LaneReject(Exception):
    pass


@dataclass
class _LanePlan:
    f: RealFunc
    scale: int
    const_cache: dict
    x: Rat  # carrier endpoints (exact)
    y: Rat
    density: Rat  # masses are length * density (1 for Lebesgue)
    mass_hi: Rat
    value_bound: Rat  # proven bound on |f| over the padded box


def _lane_analyze(node: RealFunc, box: RatInterval, scale: int, tol: Rat, consts: dict):
    """Prove magnitude and slack bounds for int64 evaluation of node.

    Returns (value_bound V, widening bound W): every scaled intermediate is
    certified below V*scale + W*scale < 2^61, and the outward slack of the
    lane extension is at most W.  Raises _LaneReject when unprovable.
    """
    inv_s = rat(1, scale)
    if isinstance(node, Const):
        if node._rat is not None:
            v = abs(node._rat) + inv_s
            _cap_check(v, scale)
            return v, inv_s
        e = node.value.approx(tol)
        consts[id(node)] = e
        v = max(abs(e.lo), abs(e.hi)) + inv_s
        _cap_check(v, scale)
        return v, tol + inv_s
    if isinstance(node, Identity):
        v = max(abs(box.lo), abs(box.hi)) + inv_s
        _cap_check(v, scale)
        return v, inv_s
    if isinstance(node, (Add, Mul, TMinus, Min, Max)):
        v1, w1 = _lane_analyze(node.f, box, scale, tol, consts)
        v2, w2 = _lane_analyze(node.g, box, scale, tol, consts)
        if isinstance(node, Add):
            v, w = v1 + v2, w1 + w2
        elif isinstance(node, Mul):
            if v1 * v2 * scale * scale >= _INT64_CAP:
                raise _LaneReject("product magnitude")
            v = v1 * v2 + inv_s
            w = w1 * v2 + w2 * v1 + inv_s
        else:  # TMinus, Min, Max are 1-Lipschitz in each argument
            v, w = v1 + v2, w1 + w2
        _cap_check(v, scale)
        return v, w
    if isinstance(node, Neg):
        return _lane_analyze(node.f, box, scale, tol, consts)
    if isinstance(node, Recip):
        v1, w1 = _lane_analyze(node.f, box, scale, tol, consts)
        e = node.f.ext(box, tol)
        if e.lo > 0:
            m = e.lo
        elif e.hi < 0:
            m = -e.hi
        else:
            raise _LaneReject("reciprocal child may contain 0")
        if w1 >= m / 2:
            raise _LaneReject("reciprocal child slack too large")
        if scale * scale >= _INT64_CAP:
            raise _LaneReject("reciprocal scale overflow")
        m_eff = m - w1
        v = 1 / m_eff + inv_s
        w = w1 / (m * m_eff) + inv_s
        _cap_check(v, scale)
        return v, w
    if isinstance(node, Compose):
        v_in, w_in = _lane_analyze(node.g, box, scale, tol, consts)
        inner_box = node.g.ext(box, tol)
        inner_wide = RatInterval(inner_box.lo - w_in, inner_box.hi + w_in)
        v_f, w_f = _lane_analyze(node.f, inner_wide, scale, tol, consts)
        s = node.f.slope_extension(inner_wide, tol)
        if s is None:
            raise _LaneReject("composition without slope bound")
        lip = max(abs(s.lo), abs(s.hi))
        return v_f, w_f + lip * w_in
    raise _LaneReject(f"unsupported node {type(node).__name__}")


def _cap_check(v: Rat, scale: int):
    if v * scale >= _INT64_CAP:
        raise _LaneReject("magnitude overflow")


def _lane_eval(node: RealFunc, lo, hi, scale: int, consts: dict):
    """Evaluate node on scaled int64 interval arrays, outward rounded."""
    if isinstance(node, Const):
        if node._rat is not None:
            q = node._rat * scale
            return np.int64(rat_floor(q)), np.int64(rat_ceil(q))
        e = consts[id(node)]
        return np.int64(rat_floor(e.lo * scale)), np.int64(rat_ceil(e.hi * scale))
    if isinstance(node, Identity):
        return lo, hi
    if isinstance(node, Add):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        c, d = _lane_eval(node.g, lo, hi, scale, consts)
        return a + c, b + d
    if isinstance(node, Neg):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        return -b, -a
    if isinstance(node, Mul):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        c, d = _lane_eval(node.g, lo, hi, scale, consts)
        p1, p2, p3, p4 = a * c, a * d, b * c, b * d
        mn = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        mx = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        s = np.int64(scale)
        return mn // s, -((-mx) // s)
    if isinstance(node, TMinus):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        c, d = _lane_eval(node.g, lo, hi, scale, consts)
        z = np.int64(0)
        return np.maximum(a - d, z), np.maximum(b - c, z)
    if isinstance(node, Min):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        c, d = _lane_eval(node.g, lo, hi, scale, consts)
        return np.minimum(a, c), np.minimum(b, d)
    if isinstance(node, Max):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        c, d = _lane_eval(node.g, lo, hi, scale, consts)
        return np.maximum(a, c), np.maximum(b, d)
    if isinstance(node, Recip):
        a, b = _lane_eval(node.f, lo, hi, scale, consts)
        s2 = np.int64(scale) * np.int64(scale)
        if bool(np.all(a > 0)) or bool(np.all(b < 0)):
            return s2 // b, -((-s2) // a)
        raise _LaneReject("reciprocal child touched 0 at runtime")
    if isinstance(node, Compose):
        a, b = _lane_eval(node.g, lo, hi, scale, consts)
        return _lane_eval(node.f, a, b, scale, consts)
    raise _LaneReject(f"unsupported node {type(node).__name__}")


def lane_plan(
    f: RealFunc, mu: Valuation, box: RatInterval, ext_tol: Rat
) -> Optional[_LanePlan]:
    """Try to prove the grid lane applicable; None means use the scalar lane."""
    exact = mu.exact_bounds()
    if exact is None or mu.kind not in ("lebesgue", "uniform"):
        return None
    x, y = exact
    if mu.kind == "uniform":
        if not x < y:
            return None
        density = 1 / (y - x)
        mass_hi = ONE
    else:
        density = ONE
        mass_hi = max(ZERO, y - x)
    span_pad = box.width() / 64
    for log2s in (30, 28, 26, 24):
        scale = 1 << log2s
        pad = span_pad + rat(4, scale)
        padded = RatInterval(box.lo - pad, box.hi + pad)
        consts: dict = {}
        try:
            vbound, widening = _lane_analyze(f, padded, scale, ext_tol, consts)
        except (NotSeparatedFromZero, _LaneReject):
            continue
        if widening <= ext_tol + rat(64, scale):
            return _LanePlan(f, scale, consts, x, y, density, mass_hi, vbound)
    return None


_CHUNK = 1 << 19


def lane_sweep(
    plan: _LanePlan,
    mu: Valuation,
    box: RatInterval,
    r1: Rat,
    n: int,
    m_leaves: int,
) -> Optional[SweepResult]:
    """Vectorized fused sweep; returns None when int64 bounds cannot hold.

    Requires the level step r1 to be a power of two no finer than 1/scale,
    so that level counts per cell reduce to integer divisions by a power of
    two (no multiplications that could overflow).
    """
    s = plan.scale
    num, den = int(r1.numerator), int(r1.denominator)
    if num & (num - 1) or den & (den - 1):  # both must be powers of two
        return None
    if den > s * num:
        return None  # r1 finer than the grid scale
    step = (s * num) // den  # r1 * scale, an integer >= 1
    a_s = rat_floor(box.lo * s) - 1
    b_raw = rat_ceil(box.hi * s) + 1
    span = b_raw - a_s
    if m_leaves < 64:
        m_leaves = 64
    if m_leaves > span:
        m_leaves = span
    ws = -((a_s - b_raw) // m_leaves)  # ceil div
    m_leaves = -((-span) // ws)  # keep the overshoot below one leaf
    if (plan.value_bound + 1) * s >= _INT64_CAP or m_leaves * n >= _INT64_CAP:
        return None
    xs_in = rat_ceil(plan.x * s)
    ys_in = rat_floor(plan.y * s)

    rn = r1 * n
    k_total = 0
    c_total = 0
    edge_lower = ZERO
    edge_upper = ZERO
    d = np.int64(step)
    n64 = np.int64(n)

    for start in range(0, m_leaves, _CHUNK):
        count = min(_CHUNK, m_leaves - start)
        i = np.arange(start, start + count, dtype=np.int64)
        lo = np.int64(a_s) + i * np.int64(ws)
        hi = lo + np.int64(ws)
        try:
            elo, ehi = _lane_eval(plan.f, lo, hi, s, plan.const_cache)
        except _LaneReject:
            return None
        if np.ndim(elo) == 0:
            elo = np.full(count, elo, dtype=np.int64)
        if np.ndim(ehi) == 0:
            ehi = np.full(count, ehi, dtype=np.int64)
        # K = #{i in [1, n] : i*r1 < elo/s} = ceil(elo/step) - 1, clamped
        k = -((-elo) // d) - 1
        np.clip(k, 0, n64, out=k)
        # C = #{j in [0, n-1] : j*r1 > ehi/s} = n - 1 - floor(ehi/step), clamped
        c = (n64 - 1) - ehi // d
        np.clip(c, 0, n64, out=c)
        inside = (lo >= xs_in) & (hi <= ys_in)
        k_total += int(k[inside].sum())
        c_total += int(c[inside].sum())
        for idx in np.nonzero(~inside)[0]:
            leaf_lo = rat(int(lo[idx]), s)
            leaf_hi = rat(int(hi[idx]), s)
            mass = max(ZERO, min(leaf_hi, plan.y) - max(leaf_lo, plan.x))
            if mass > 0:
                edge_lower += mass * int(k[idx])
                edge_upper += mass * int(c[idx])

    w_mass = rat(ws, s)
    lower = r1 * plan.density * (w_mass * k_total + edge_lower)
    upper = rn * plan.mass_hi - r1 * plan.density * (w_mass * c_total + edge_upper)
    return SweepResult(lower, upper, m_leaves, "grid")
