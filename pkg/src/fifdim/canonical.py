"""Closed-form analysis of expressions that reduce to a few shapes.

Expressions built from the grammar frequently collapse to one of four
canonical shapes: a constant, an affine function, a single sinusoid
``a*sin(b*x + c) + d``, or a piecewise-linear table.  For these, extrema,
total variation, Lipschitz constants and zero counts all have exact
closed forms, which is what lets the scaling-matrix entries be computed
with zero enclosure width.

``canonicalize`` walks an expression tree and returns a form, or None
when the expression does not reduce (those fall back to the certified
branch-and-bound in :mod:`fifdim.analysis`).  Sums of equal-frequency
sinusoids are combined exactly by phasor addition, so structural
cancellations (e.g. offsets summing to zero) are recognized.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from . import expressions as ex

__all__ = [
    "ConstForm",
    "AffineForm",
    "SinusoidForm",
    "PwlForm",
    "canonicalize",
    "form_range",
    "form_range_vec",
    "form_variation",
    "form_lipschitz",
    "form_zero_count",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ConstForm:
    value: float


@dataclass(frozen=True)
class AffineForm:
    slope: float  # nonzero
    intercept: float


@dataclass(frozen=True)
class SinusoidForm:
    """amplitude * sin(frequency*x + phase) + offset, frequency > 0."""

    amplitude: float  # nonzero
    frequency: float
    phase: float
    offset: float


@dataclass(frozen=True)
class PwlForm:
    xs: tuple[float, ...]  # strictly increasing, covers the domain
    ys: tuple[float, ...]


Form = ConstForm | AffineForm | SinusoidForm | PwlForm


def _make_affine(slope: float, intercept: float) -> Form:
    return ConstForm(intercept) if slope == 0.0 else AffineForm(slope, intercept)


def _make_sinusoid(a: float, b: float, c: float, d: float) -> Form:
    if a == 0.0:
        return ConstForm(d)
    if b == 0.0:
        return ConstForm(a * math.sin(c) + d)
    if b < 0.0:
        a, b, c = -a, -b, -c
    return SinusoidForm(a, b, c, d)


def _affine_to_pwl(a: float, b: float, lo: float, hi: float) -> PwlForm:
    return PwlForm((lo, hi), (a * lo + b, a * hi + b))


def _pwl_eval(form: PwlForm, x: float) -> float:
    return float(np.interp(x, form.xs, form.ys))


def _merge_pwl(f1: PwlForm, f2: PwlForm, combine) -> PwlForm:
    xs = sorted(set(f1.xs) | set(f2.xs))
    ys = tuple(combine(_pwl_eval(f1, x), _pwl_eval(f2, x)) for x in xs)
    return PwlForm(tuple(xs), ys)


def _add(f1: Form, f2: Form, lo: float, hi: float) -> Form | None:
    if isinstance(f2, ConstForm) and not isinstance(f1, ConstForm):
        f1, f2 = f2, f1
    if isinstance(f1, ConstForm):
        c = f1.value
        if isinstance(f2, ConstForm):
            return ConstForm(c + f2.value)
        if isinstance(f2, AffineForm):
            return AffineForm(f2.slope, f2.intercept + c)
        if isinstance(f2, SinusoidForm):
            return SinusoidForm(f2.amplitude, f2.frequency, f2.phase, f2.offset + c)
        return PwlForm(f2.xs, tuple(y + c for y in f2.ys))
    if isinstance(f1, SinusoidForm) or isinstance(f2, SinusoidForm):
        if isinstance(f1, SinusoidForm) and isinstance(f2, SinusoidForm) and f1.frequency == f2.frequency:
            # exact phasor addition of equal-frequency sinusoids
            z = f1.amplitude * complex(math.cos(f1.phase), math.sin(f1.phase)) + f2.amplitude * complex(
                math.cos(f2.phase), math.sin(f2.phase)
            )
            return _make_sinusoid(abs(z), f1.frequency, math.atan2(z.imag, z.real) if z != 0 else 0.0,
                                  f1.offset + f2.offset)
        return None
    # both affine/pwl from here on
    if isinstance(f1, AffineForm) and isinstance(f2, AffineForm):
        return _make_affine(f1.slope + f2.slope, f1.intercept + f2.intercept)
    p1 = _affine_to_pwl(f1.slope, f1.intercept, lo, hi) if isinstance(f1, AffineForm) else f1
    p2 = _affine_to_pwl(f2.slope, f2.intercept, lo, hi) if isinstance(f2, AffineForm) else f2
    return _merge_pwl(p1, p2, lambda u, v: u + v)


def _scale(f: Form, s: float) -> Form:
    if s == 0.0:
        return ConstForm(0.0)
    if isinstance(f, ConstForm):
        return ConstForm(f.value * s)
    if isinstance(f, AffineForm):
        return AffineForm(f.slope * s, f.intercept * s)
    if isinstance(f, SinusoidForm):
        return SinusoidForm(f.amplitude * s, f.frequency, f.phase, f.offset * s)
    return PwlForm(f.xs, tuple(y * s for y in f.ys))


def _abs_form(f: Form, lo: float, hi: float) -> Form | None:
    if isinstance(f, ConstForm):
        return ConstForm(abs(f.value))
    if isinstance(f, (AffineForm, SinusoidForm)):
        fmin, fmax = form_range(f, lo, hi)
        if fmin >= 0.0:
            return f
        if fmax <= 0.0:
            return _scale(f, -1.0)
        if isinstance(f, AffineForm):
            root = -f.intercept / f.slope
            xs = sorted({lo, hi, root})
            return PwlForm(tuple(xs), tuple(abs(f.slope * x + f.intercept) for x in xs))
        return None  # |sinusoid| with sign changes is not a supported shape
    # piecewise linear: insert zero crossings, then fold
    xs = list(f.xs)
    ys = list(f.ys)
    out_x = [xs[0]]
    out_y = [abs(ys[0])]
    for j in range(len(xs) - 1):
        if ys[j] * ys[j + 1] < 0.0:
            t = ys[j] / (ys[j] - ys[j + 1])
            out_x.append(xs[j] + t * (xs[j + 1] - xs[j]))
            out_y.append(0.0)
        out_x.append(xs[j + 1])
        out_y.append(abs(ys[j + 1]))
    return PwlForm(tuple(out_x), tuple(out_y))


@functools.lru_cache(maxsize=4096)
def canonicalize(ast: ex.Expr, domain: tuple[float, float]) -> Form | None:
    """Reduce ``ast`` to a canonical form on ``domain``, or None."""
    lo, hi = domain
    if isinstance(ast, ex.Num):
        return ConstForm(ast.value)
    if isinstance(ast, ex.Pi):
        return ConstForm(math.pi)
    if isinstance(ast, ex.Var):
        return AffineForm(1.0, 0.0)
    if isinstance(ast, ex.Pwl):
        return PwlForm(ast.xs, ast.ys)
    if isinstance(ast, ex.Neg):
        f = canonicalize(ast.arg, domain)
        return None if f is None else _scale(f, -1.0)
    if isinstance(ast, (ex.Add, ex.Sub)):
        f1 = canonicalize(ast.left, domain)
        f2 = canonicalize(ast.right, domain)
        if f1 is None or f2 is None:
            return None
        if isinstance(ast, ex.Sub):
            f2 = _scale(f2, -1.0)
        return _add(f1, f2, lo, hi)
    if isinstance(ast, ex.Mul):
        f1 = canonicalize(ast.left, domain)
        f2 = canonicalize(ast.right, domain)
        if f1 is None or f2 is None:
            return None
        if isinstance(f1, ConstForm):
            return _scale(f2, f1.value)
        if isinstance(f2, ConstForm):
            return _scale(f1, f2.value)
        return None
    if isinstance(ast, ex.Div):
        f1 = canonicalize(ast.left, domain)
        f2 = canonicalize(ast.right, domain)
        if f1 is None or not isinstance(f2, ConstForm) or f2.value == 0.0:
            return None
        return _scale(f1, 1.0 / f2.value)
    if isinstance(ast, ex.Call):
        f = canonicalize(ast.arg, domain)
        if f is None:
            return None
        if ast.fn == "abs":
            return _abs_form(f, lo, hi)
        if isinstance(f, ConstForm):
            fn = math.sin if ast.fn == "sin" else math.cos
            return ConstForm(fn(f.value))
        if isinstance(f, AffineForm):
            phase = f.intercept if ast.fn == "sin" else f.intercept + math.pi / 2.0
            return _make_sinusoid(1.0, f.slope, phase, 0.0)
        return None
    raise TypeError(f"not an expression node: {ast!r}")


# ---------------------------------------------------------------------------
# exact queries on forms


def _contains_grid(tlo: float, thi: float, t0: float, period: float) -> bool:
    """Does [tlo, thi] contain a point t0 + k*period for integer k?"""
    return math.floor((thi - t0) / period) >= math.ceil((tlo - t0) / period)


def form_range(form: Form, lo: float, hi: float) -> tuple[float, float]:
    """Exact (min, max) of the signed function over [lo, hi]."""
    fmin, fmax, _, _ = form_range_witness(form, lo, hi)
    return fmin, fmax


def form_range_witness(form: Form, lo: float, hi: float):
    """Like :func:`form_range` but also returns argmin/argmax points."""
    if isinstance(form, ConstForm):
        return form.value, form.value, lo, lo
    if isinstance(form, AffineForm):
        vlo = form.slope * lo + form.intercept
        vhi = form.slope * hi + form.intercept
        if vlo <= vhi:
            return vlo, vhi, lo, hi
        return vhi, vlo, hi, lo
    if isinstance(form, PwlForm):
        cand = [lo, hi] + [x for x in form.xs if lo < x < hi]
        vals = [_pwl_eval(form, x) for x in cand]
        imin = min(range(len(vals)), key=vals.__getitem__)
        imax = max(range(len(vals)), key=vals.__getitem__)
        return vals[imin], vals[imax], cand[imin], cand[imax]
    a, b, c, d = form.amplitude, form.frequency, form.phase, form.offset
    cand = [lo, hi]
    tlo, thi = b * lo + c, b * hi + c
    # sin peaks at pi/2 + 2k*pi, troughs at -pi/2 + 2k*pi
    for t0 in (math.pi / 2.0, -math.pi / 2.0):
        k0 = math.ceil((tlo - t0) / _TWO_PI)
        k1 = math.floor((thi - t0) / _TWO_PI)
        for k in range(k0, k1 + 1):
            x = (t0 + k * _TWO_PI - c) / b
            if lo <= x <= hi:
                cand.append(x)
    vals = [a * math.sin(b * x + c) + d for x in cand]
    # snap interior extremes to the exact peak values
    for i, x in enumerate(cand[2:], start=2):
        t = b * x + c
        vals[i] = d + a if math.sin(t) > 0 else d - a
    imin = min(range(len(vals)), key=vals.__getitem__)
    imax = max(range(len(vals)), key=vals.__getitem__)
    return vals[imin], vals[imax], cand[imin], cand[imax]


def form_range_vec(form: Form, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized exact signed range over many [lo, hi] cells."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    if isinstance(form, ConstForm):
        v = np.full(lo.shape, form.value)
        return v, v.copy()
    if isinstance(form, AffineForm):
        vlo = form.slope * lo + form.intercept
        vhi = form.slope * hi + form.intercept
        return np.minimum(vlo, vhi), np.maximum(vlo, vhi)
    if isinstance(form, PwlForm):
        vlo = np.interp(lo, form.xs, form.ys)
        vhi = np.interp(hi, form.xs, form.ys)
        fmin = np.minimum(vlo, vhi)
        fmax = np.maximum(vlo, vhi)
        for x, y in zip(form.xs, form.ys):
            inside = (lo < x) & (x < hi)
            if inside.any():
                fmin[inside] = np.minimum(fmin[inside], y)
                fmax[inside] = np.maximum(fmax[inside], y)
        return fmin, fmax
    a, b, c, d = form.amplitude, form.frequency, form.phase, form.offset
    vlo = a * np.sin(b * lo + c) + d
    vhi = a * np.sin(b * hi + c) + d
    fmin = np.minimum(vlo, vhi)
    fmax = np.maximum(vlo, vhi)
    tlo, thi = b * lo + c, b * hi + c
    has_peak = np.floor((thi - math.pi / 2.0) / _TWO_PI) >= np.ceil((tlo - math.pi / 2.0) / _TWO_PI)
    has_trough = np.floor((thi + math.pi / 2.0) / _TWO_PI) >= np.ceil((tlo + math.pi / 2.0) / _TWO_PI)
    if a >= 0:
        fmax = np.where(has_peak, d + a, fmax)
        fmin = np.where(has_trough, d - a, fmin)
    else:
        fmax = np.where(has_trough, d - a, fmax)
        fmin = np.where(has_peak, d + a, fmin)
    return fmin, fmax


def form_variation(form: Form, lo: float, hi: float) -> float:
    """Exact total variation over [lo, hi]."""
    if isinstance(form, ConstForm):
        return 0.0
    if isinstance(form, AffineForm):
        return abs(form.slope) * (hi - lo)
    if isinstance(form, PwlForm):
        xs = [lo] + [x for x in form.xs if lo < x < hi] + [hi]
        ys = [_pwl_eval(form, x) for x in xs]
        return float(sum(abs(ys[j + 1] - ys[j]) for j in range(len(ys) - 1)))
    a, b, c, _ = form.amplitude, form.frequency, form.phase, form.offset
    # monotone between consecutive critical points t = pi/2 + k*pi
    tlo, thi = b * lo + c, b * hi + c
    k0 = math.ceil((tlo - math.pi / 2.0) / math.pi)
    k1 = math.floor((thi - math.pi / 2.0) / math.pi)
    ts = [tlo] + [math.pi / 2.0 + k * math.pi for k in range(k0, k1 + 1)] + [thi]
    vals = [math.sin(t) for t in ts]
    for i in range(1, len(ts) - 1):
        vals[i] = 1.0 if math.sin(ts[i]) > 0 else -1.0
    return abs(a) * float(sum(abs(vals[j + 1] - vals[j]) for j in range(len(vals) - 1)))


def form_lipschitz(form: Form, lo: float, hi: float) -> float:
    """Exact sup of |f'| over [lo, hi] (max slope magnitude for tables)."""
    if isinstance(form, ConstForm):
        return 0.0
    if isinstance(form, AffineForm):
        return abs(form.slope)
    if isinstance(form, PwlForm):
        best = 0.0
        for j in range(len(form.xs) - 1):
            if form.xs[j + 1] <= lo or form.xs[j] >= hi:
                continue
            best = max(best, abs((form.ys[j + 1] - form.ys[j]) / (form.xs[j + 1] - form.xs[j])))
        return best
    a, b, c, _ = form.amplitude, form.frequency, form.phase, form.offset
    tlo, thi = b * lo + c, b * hi + c
    if _contains_grid(tlo, thi, 0.0, math.pi):  # |cos| attains 1
        cos_max = 1.0
    else:
        cos_max = max(abs(math.cos(tlo)), abs(math.cos(thi)))
    return abs(a) * b * cos_max


def form_zero_count(form: Form, lo: float, hi: float) -> int | float:
    """Exact number of zeros in [lo, hi]; ``math.inf`` if a whole
    subinterval vanishes."""
    if isinstance(form, ConstForm):
        return math.inf if form.value == 0.0 else 0
    if isinstance(form, AffineForm):
        root = -form.intercept / form.slope
        return 1 if lo <= root <= hi else 0
    if isinstance(form, PwlForm):
        roots: list[float] = []
        for j in range(len(form.xs) - 1):
            x0, x1 = form.xs[j], form.xs[j + 1]
            if x1 < lo or x0 > hi:
                continue
            y0, y1 = form.ys[j], form.ys[j + 1]
            if y0 == 0.0 and y1 == 0.0:
                if max(x0, lo) < min(x1, hi):
                    return math.inf
                roots.append(max(x0, lo))
                continue
            if y0 == 0.0:
                if lo <= x0 <= hi:
                    roots.append(x0)
            elif y0 * y1 < 0.0:
                r = x0 + (x1 - x0) * y0 / (y0 - y1)
                if lo <= r <= hi:
                    roots.append(r)
        if form.ys[-1] == 0.0 and lo <= form.xs[-1] <= hi:
            roots.append(form.xs[-1])
        return len(sorted(set(roots)))
    a, b, c, d = form.amplitude, form.frequency, form.phase, form.offset
    s = -d / a
    if abs(s) > 1.0:
        return 0
    tlo, thi = b * lo + c, b * hi + c
    base = math.asin(max(-1.0, min(1.0, s)))
    count = 0
    for t0 in ((base,) if abs(s) == 1.0 else (base, math.pi - base)):
        k0 = math.ceil((tlo - t0) / _TWO_PI)
        k1 = math.floor((thi - t0) / _TWO_PI)
        count += max(0, k1 - k0 + 1)
    return count
