"""Certified bounds for expression functions.

Extrema of |f| come in two flavors: exact closed forms for the canonical
shapes (affine, single sinusoid, piecewise linear), and a branch-and-bound
search for everything else.  The search computes a compositional slope
enclosure per cell: cells whose slope range excludes 0 are monotone and
resolve exactly at their endpoints, and the rest are bounded by interval
arithmetic intersected with a midpoint-plus-slope enclosure.  The max
slope magnitude doubles as the adaptive Lipschitz bound.

All results are genuine enclosures; ``certified`` is False only when the
requested width was not reached within the subdivision budget.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from . import canonical as cf
from . import expressions as ex
from .errors import ExpressionError
from .expressions import ExprFunction

__all__ = [
    "IntervalBound",
    "ZeroCount",
    "VariationEstimate",
    "interval_extrema_abs",
    "interval_extrema",
    "lipschitz_bound",
    "total_variation",
    "variation_upper",
    "count_zeros",
    "vanishes_on_subinterval",
    "DEFAULT_EXTREMA_TOL",
    "DEFAULT_EXTREMA_BUDGET",
]

DEFAULT_EXTREMA_TOL = 1e-12
DEFAULT_EXTREMA_BUDGET = 100_000


@dataclass(frozen=True)
class IntervalBound:
    """Certified enclosure [lo, hi] of a single real quantity.

    When ``certified`` is True the true value lies in [lo, hi] and the
    width met the requested tolerance; False means the enclosure is still
    valid but wider than asked for (budget ran out).
    """

    lo: float
    hi: float
    certified: bool = True

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class ZeroCount:
    """Number of zeros on an interval.

    ``count`` is None when a whole subinterval vanishes (infinitely many
    zeros).  ``exact`` False marks a sampled estimate rather than a
    closed-form count.
    """

    count: int | None
    exact: bool

    @property
    def finite(self) -> bool:
        return self.count is not None


@dataclass(frozen=True)
class VariationEstimate:
    value: float
    level: int
    converged: bool
    exact: bool


def _domain_interval(f: ExprFunction, interval) -> tuple[float, float]:
    if interval is None:
        return f.domain
    lo, hi = float(interval[0]), float(interval[1])
    a, b = f.domain
    if lo < a - 1e-12 or hi > b + 1e-12 or lo >= hi:
        raise ExpressionError(f"interval [{lo}, {hi}] not inside domain [{a}, {b}]")
    return lo, hi


# ---------------------------------------------------------------------------
# interval arithmetic


def _sin_interval(tlo: float, thi: float) -> tuple[float, float]:
    vlo, vhi = math.sin(tlo), math.sin(thi)
    lo, hi = min(vlo, vhi), max(vlo, vhi)
    if cf._contains_grid(tlo, thi, math.pi / 2.0, 2.0 * math.pi):
        hi = 1.0
    if cf._contains_grid(tlo, thi, -math.pi / 2.0, 2.0 * math.pi):
        lo = -1.0
    return lo, hi


def _ia_range(node: ex.Expr, lo: float, hi: float) -> tuple[float, float]:
    """Certified (not tight) range enclosure by interval arithmetic."""
    if isinstance(node, ex.Num):
        return node.value, node.value
    if isinstance(node, ex.Pi):
        return math.pi, math.pi
    if isinstance(node, ex.Var):
        return lo, hi
    if isinstance(node, ex.Neg):
        a, b = _ia_range(node.arg, lo, hi)
        return -b, -a
    if isinstance(node, ex.Add):
        a, b = _ia_range(node.left, lo, hi)
        c, d = _ia_range(node.right, lo, hi)
        return a + c, b + d
    if isinstance(node, ex.Sub):
        a, b = _ia_range(node.left, lo, hi)
        c, d = _ia_range(node.right, lo, hi)
        return a - d, b - c
    if isinstance(node, ex.Mul):
        a, b = _ia_range(node.left, lo, hi)
        c, d = _ia_range(node.right, lo, hi)
        prods = (a * c, a * d, b * c, b * d)
        return min(prods), max(prods)
    if isinstance(node, ex.Div):
        a, b = _ia_range(node.left, lo, hi)
        c = ex.evaluate(node.right, 0.0)  # constant by construction
        return (a / c, b / c) if c > 0 else (b / c, a / c)
    if isinstance(node, ex.Call):
        a, b = _ia_range(node.arg, lo, hi)
        if node.fn == "sin":
            return _sin_interval(a, b)
        if node.fn == "cos":
            return _sin_interval(a + math.pi / 2.0, b + math.pi / 2.0)
        if a >= 0.0:
            return a, b
        if b <= 0.0:
            return -b, -a
        return 0.0, max(-a, b)
    if isinstance(node, ex.Pwl):
        form = cf.PwlForm(node.xs, node.ys)
        return cf.form_range(form, max(lo, node.xs[0]), min(hi, node.xs[-1]))
    raise TypeError(f"not an expression node: {node!r}")


def _imul(a: tuple[float, float], b: tuple[float, float]) -> tuple[float, float]:
    prods = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
    return min(prods), max(prods)


def _slope_range(node: ex.Expr, lo: float, hi: float) -> tuple[float, float]:
    """Certified enclosure of every difference quotient of the node on
    [lo, hi] (the derivative range on smooth pieces, a slope hull across
    kinks).  Its max magnitude is the adaptive Lipschitz bound; a range
    that excludes 0 certifies the cell monotone."""
    if isinstance(node, (ex.Num, ex.Pi)):
        return 0.0, 0.0
    if isinstance(node, ex.Var):
        return 1.0, 1.0
    if isinstance(node, ex.Neg):
        a, b = _slope_range(node.arg, lo, hi)
        return -b, -a
    if isinstance(node, ex.Add):
        a1, b1 = _slope_range(node.left, lo, hi)
        a2, b2 = _slope_range(node.right, lo, hi)
        return a1 + a2, b1 + b2
    if isinstance(node, ex.Sub):
        a1, b1 = _slope_range(node.left, lo, hi)
        a2, b2 = _slope_range(node.right, lo, hi)
        return a1 - b2, b1 - a2
    if isinstance(node, ex.Mul):
        # (fg)' = f'g + fg'
        t1 = _imul(_slope_range(node.left, lo, hi), _ia_range(node.right, lo, hi))
        t2 = _imul(_ia_range(node.left, lo, hi), _slope_range(node.right, lo, hi))
        return t1[0] + t2[0], t1[1] + t2[1]
    if isinstance(node, ex.Div):
        c = ex.evaluate(node.right, 0.0)
        a, b = _slope_range(node.left, lo, hi)
        return (a / c, b / c) if c > 0 else (b / c, a / c)
    if isinstance(node, ex.Call):
        if node.fn == "abs":
            a, b = _slope_range(node.arg, lo, hi)
            ra, rb = _ia_range(node.arg, lo, hi)
            if ra >= 0.0:
                return a, b
            if rb <= 0.0:
                return -b, -a
            m = max(abs(a), abs(b))  # sign flips inside: symmetric hull
            return -m, m
        ua, ub = _ia_range(node.arg, lo, hi)
        if node.fn == "sin":
            factor = _sin_interval(ua + math.pi / 2.0, ub + math.pi / 2.0)  # cos range
        else:
            s = _sin_interval(ua, ub)
            factor = (-s[1], -s[0])  # -sin range
        return _imul(factor, _slope_range(node.arg, lo, hi))
    if isinstance(node, ex.Pwl):
        slopes = [
            (node.ys[j + 1] - node.ys[j]) / (node.xs[j + 1] - node.xs[j])
            for j in range(len(node.xs) - 1)
            if node.xs[j + 1] > lo and node.xs[j] < hi
        ]
        if not slopes:
            return 0.0, 0.0
        return min(slopes), max(slopes)
    raise TypeError(f"not an expression node: {node!r}")


def _lipschitz_on(node: ex.Expr, lo: float, hi: float) -> float:
    """Adaptive compositional Lipschitz bound on [lo, hi]."""
    a, b = _slope_range(node, lo, hi)
    return max(abs(a), abs(b))


# ---------------------------------------------------------------------------
# branch-and-bound extrema

_MAX_ABS, _MIN_ABS, _MAX_SIG, _MIN_SIG = range(4)


def _cell_bounds(node, clo, chi, mode):
    """(upper bound of the objective on the cell, attained sample value).

    A cell whose slope range excludes 0 is monotone, so its range is
    exactly the endpoint values and the bound is sharp; other cells get
    the intersection of interval arithmetic with a midpoint-plus-slope
    enclosure."""
    slo, shi = _slope_range(node, clo, chi)
    if slo >= 0.0 or shi <= 0.0:
        va = float(ex.evaluate(node, clo))
        vb = float(ex.evaluate(node, chi))
        rlo, rhi = (va, vb) if va <= vb else (vb, va)
        exact = True
    else:
        rlo, rhi = _ia_range(node, clo, chi)
        fmid = float(ex.evaluate(node, 0.5 * (clo + chi)))
        half = 0.5 * (chi - clo) * max(abs(slo), abs(shi))
        rlo = max(rlo, fmid - half)
        rhi = min(rhi, fmid + half)
        exact = False
    if mode == _MAX_ABS:
        ub = max(abs(rlo), abs(rhi))
        return ub, ub if exact else abs(fmid)
    if mode == _MIN_ABS:
        # objective is -|f|; a monotone sign change attains zero exactly
        lb = 0.0 if rlo <= 0.0 <= rhi else min(abs(rlo), abs(rhi))
        return -lb, -lb if exact else -abs(fmid)
    if mode == _MAX_SIG:
        return rhi, rhi if exact else fmid
    return -rlo, -rlo if exact else -fmid  # _MIN_SIG: objective is -f


def _bnb_max(node, lo, hi, mode, rel_tol, budget):
    """Maximize the mode's objective; returns (lb, ub, witness, certified)."""
    r0 = _ia_range(node, lo, hi)
    scale = max(1.0, abs(r0[0]), abs(r0[1]))
    tol = rel_tol * scale
    ub0, s0 = _cell_bounds(node, lo, hi, mode)
    for xe in (lo, hi):
        v = float(ex.evaluate(node, xe))
        cand = abs(v) if mode == _MAX_ABS else -abs(v) if mode == _MIN_ABS else v if mode == _MAX_SIG else -v
        s0 = max(s0, cand)
    best = s0
    witness = (lo, hi)
    heap = [(-ub0, 0, lo, hi)]
    counter = 1
    boxes = 0
    while heap and boxes < budget:
        neg_ub, _, clo, chi = heapq.heappop(heap)
        ub = -neg_ub
        if ub <= best + tol:
            # a sample elsewhere may sit an ulp above this cell's bound
            return best, max(ub, best), witness, True
        mid = 0.5 * (clo + chi)
        for a, b in ((clo, mid), (mid, chi)):
            cub, csample = _cell_bounds(node, a, b, mode)
            boxes += 1
            if csample > best:
                best = csample
                witness = (a, b)
            if cub > best:
                heapq.heappush(heap, (-cub, counter, a, b))
                counter += 1
    if not heap:
        return best, best, witness, True
    ub = -heap[0][0]
    return best, max(ub, best), witness, False


def _form_of(f: ExprFunction):
    return cf.canonicalize(f.ast, f.domain)


def _abs_extrema_closed(form, lo, hi):
    fmin, fmax, xmin, xmax = cf.form_range_witness(form, lo, hi)
    hi_abs = max(abs(fmin), abs(fmax))
    x_hi = xmin if abs(fmin) >= abs(fmax) else xmax
    if fmin < 0.0 < fmax:
        lo_abs, x_lo = 0.0, None  # a zero crossing exists somewhere inside
    elif fmin >= 0.0:
        lo_abs, x_lo = fmin, xmin
    else:
        lo_abs, x_lo = -fmax, xmax
    return lo_abs, hi_abs, x_lo, x_hi


def interval_extrema_abs(
    f: ExprFunction,
    interval=None,
    tol: float = DEFAULT_EXTREMA_TOL,
    budget: int = DEFAULT_EXTREMA_BUDGET,
) -> tuple[IntervalBound, IntervalBound]:
    """Certified enclosures of min and max of |f| over a subinterval.

    Canonical shapes get exact closed-form extrema (width 0); everything
    else goes through branch-and-bound with the given relative tolerance.
    """
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        lo_abs, hi_abs, _, _ = _abs_extrema_closed(form, lo, hi)
        return IntervalBound(lo_abs, lo_abs), IntervalBound(hi_abs, hi_abs)
    max_lb, max_ub, _, ok_max = _bnb_max(f.ast, lo, hi, _MAX_ABS, tol, budget)
    min_lb, min_ub, _, ok_min = _bnb_max(f.ast, lo, hi, _MIN_ABS, tol, budget)
    # the min search maximized -|f| over [min_lb, min_ub]; negate back
    return (
        IntervalBound(-min_ub, -min_lb, ok_min),
        IntervalBound(max_lb, max_ub, ok_max),
    )


def interval_extrema(
    f: ExprFunction,
    interval=None,
    tol: float = DEFAULT_EXTREMA_TOL,
    budget: int = DEFAULT_EXTREMA_BUDGET,
) -> tuple[IntervalBound, IntervalBound]:
    """Certified enclosures of the signed min and max of f."""
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        fmin, fmax = cf.form_range(form, lo, hi)
        return IntervalBound(fmin, fmin), IntervalBound(fmax, fmax)
    max_lb, max_ub, _, ok_max = _bnb_max(f.ast, lo, hi, _MAX_SIG, tol, budget)
    min_lb, min_ub, _, ok_min = _bnb_max(f.ast, lo, hi, _MIN_SIG, tol, budget)
    # the min search maximized -f over [min_lb, min_ub]; negate back
    return (
        IntervalBound(-min_ub, -min_lb, ok_min),
        IntervalBound(max_lb, max_ub, ok_max),
    )


def max_abs_witness(f: ExprFunction, interval=None, tol=DEFAULT_EXTREMA_TOL, budget=DEFAULT_EXTREMA_BUDGET):
    """(enclosure of max |f|, witness subinterval containing the argmax)."""
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        _, hi_abs, _, x_hi = _abs_extrema_closed(form, lo, hi)
        return IntervalBound(hi_abs, hi_abs), (x_hi, x_hi)
    lb, ub, witness, ok = _bnb_max(f.ast, lo, hi, _MAX_ABS, tol, budget)
    return IntervalBound(lb, ub, ok), witness


def lipschitz_bound(f: ExprFunction, interval=None) -> float:
    """A constant L with |f(x') - f(x'')| <= L |x' - x''| on the interval.

    Built by compositional rules; dominates every difference quotient but
    is not necessarily tight.
    """
    lo, hi = _domain_interval(f, interval)
    return _lipschitz_on(f.ast, lo, hi)


# ---------------------------------------------------------------------------
# variation and zeros


def _cell_edges(lo: float, hi: float, cells: int) -> np.ndarray:
    return lo + (np.arange(cells + 1) / float(cells)) * (hi - lo)


def _osc_sum_form(form, lo: float, hi: float, cells: int) -> float:
    edges = _cell_edges(lo, hi, cells)
    fmin, fmax = cf.form_range_vec(form, edges[:-1], edges[1:])
    return float(np.sum(fmax - fmin))


def _osc_sum_sampled(f: ExprFunction, lo: float, hi: float, cells: int, per_cell: int) -> float:
    xs = np.linspace(lo, hi, cells * per_cell + 1)
    vals = f(xs)
    body = vals[:-1].reshape(cells, per_cell)
    right = vals[per_cell::per_cell]
    cmax = np.maximum(body.max(axis=1), right)
    cmin = np.minimum(body.min(axis=1), right)
    return float(np.sum(cmax - cmin))


def total_variation(
    f: ExprFunction,
    interval=None,
    level: int = 8,
    base: int = 2,
    tol: float = 1e-9,
) -> VariationEstimate:
    """Oscillation sum over ``base**level`` uniform cells.

    This is a lower approximation of Var(f) that is nondecreasing in the
    level; ``converged`` is set when the last refinement moved it by less
    than ``tol``.  Exact per-cell oscillations are used for canonical
    shapes, otherwise cells are sampled (16 points per cell).
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        value = _osc_sum_form(form, lo, hi, base**level)
        prev = _osc_sum_form(form, lo, hi, base ** (level - 1)) if level > 1 else 0.0
        return VariationEstimate(value, level, abs(value - prev) < tol, True)
    value = _osc_sum_sampled(f, lo, hi, base**level, 16)
    prev = _osc_sum_sampled(f, lo, hi, base ** (level - 1), 16) if level > 1 else 0.0
    return VariationEstimate(value, level, abs(value - prev) < tol, False)


def variation_upper(f: ExprFunction, interval=None) -> float:
    """Certified upper bound on Var(f): exact for canonical shapes,
    Lipschitz * width otherwise."""
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        return cf.form_variation(form, lo, hi)
    return _lipschitz_on(f.ast, lo, hi) * (hi - lo)


def count_zeros(f: ExprFunction, interval=None, samples: int = 4096) -> ZeroCount:
    """Zero count over a subinterval; exact for canonical shapes.

    Non-canonical expressions get a sign-change count on a uniform sample
    grid, marked ``exact=False``.
    """
    lo, hi = _domain_interval(f, interval)
    form = _form_of(f)
    if form is not None:
        n = cf.form_zero_count(form, lo, hi)
        return ZeroCount(None, True) if math.isinf(n) else ZeroCount(int(n), True)
    xs = np.linspace(lo, hi, samples + 1)
    vals = np.asarray(f(xs))
    count = int(np.sum(vals == 0.0))
    count += int(np.sum(vals[:-1] * vals[1:] < 0.0))
    return ZeroCount(count, False)


def vanishes_on_subinterval(f: ExprFunction, samples: int = 257) -> bool:
    """Whether f is identically zero on some subinterval of its domain.

    Decidable for the supported grammar: canonical shapes are inspected
    structurally; the remaining expressions are analytic between table
    breakpoints, so vanishing on a subinterval forces vanishing on the
    whole piece, which dense sampling detects.  Returns True conservatively
    when a piece samples to all zeros.
    """
    lo, hi = f.domain
    form = _form_of(f)
    if form is not None:
        if isinstance(form, cf.ConstForm):
            return form.value == 0.0
        if isinstance(form, (cf.AffineForm, cf.SinusoidForm)):
            return False  # nonzero analytic
        for j in range(len(form.xs) - 1):
            if form.ys[j] == 0.0 and form.ys[j + 1] == 0.0:
                if max(form.xs[j], lo) < min(form.xs[j + 1], hi):
                    return True
        return False
    breaks = sorted({lo, hi} | {
        x for x in _collect_pwl_breaks(f.ast) if lo < x < hi
    })
    for a, b in zip(breaks[:-1], breaks[1:]):
        xs = np.linspace(a, b, samples)
        if not np.any(np.asarray(f(xs)) != 0.0):
            return True
    return False


def _collect_pwl_breaks(node: ex.Expr) -> set[float]:
    if isinstance(node, ex.Pwl):
        return set(node.xs)
    if isinstance(node, ex.Neg):
        return _collect_pwl_breaks(node.arg)
    if isinstance(node, (ex.Add, ex.Sub, ex.Mul, ex.Div)):
        return _collect_pwl_breaks(node.left) | _collect_pwl_breaks(node.right)
    if isinstance(node, ex.Call):
        return _collect_pwl_breaks(node.arg)
    return set()
