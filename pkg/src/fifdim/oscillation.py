"""Oscillation sums, oscillation vectors, and divergence certificates.

Per-cell oscillations are computed from exact grid values a few levels
deeper than the cells, which gives lower bounds of the true oscillations
(the sup over a cell can exceed the max over its grid points).  The
certified gap between the two is bounded by propagating per-cell
oscillation bounds through the maps, so inequality tests can carry an
honest slack and threshold crossings stay rigorous: a computed O_k above
a divergence threshold proves the true O_k is above it too.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import canonical as cf
from .analysis import (
    interval_extrema,
    lipschitz_bound,
    max_abs_witness,
    variation_upper,
)
from .engine import MAX_GRID_POINTS, EngineBounds, engine_bounds, grid_values
from .expressions import Add, ExprFunction
from .matrices import SumFunctionSummary, gamma_summary
from .model import FifModel

__all__ = [
    "OscillationVector",
    "Verdict",
    "DivergenceCertificate",
    "oscillation_sum",
    "oscillation_vector",
    "oscillation_gap",
    "divergence_check",
    "DEFAULT_REFINEMENT",
]

DEFAULT_REFINEMENT = 4


def _cell_oscillations(
    model: FifModel, level: int, refinement: int, max_points: int = MAX_GRID_POINTS
) -> np.ndarray:
    """Per-cell (max - min) of grid values at ``level + refinement``,
    one entry per level-``level`` cell; a lower bound of the true
    oscillations."""
    if level < 1 or refinement < 0:
        raise ValueError("level must be >= 1 and refinement >= 0")
    n = model.n
    vals = grid_values(model, level + refinement, max_points).values
    m = n**refinement
    body = vals[:-1].reshape(n**level, m)
    right = vals[m::m]
    cmax = np.maximum(body.max(axis=1), right)
    cmin = np.minimum(body.min(axis=1), right)
    return cmax - cmin


def oscillation_sum(
    model: FifModel,
    k: int,
    refinement: int = DEFAULT_REFINEMENT,
    max_points: int = MAX_GRID_POINTS,
) -> float:
    """O_k(f, I) from grid level k + refinement (lower bound, increasing
    in the refinement)."""
    return float(np.sum(_cell_oscillations(model, k, refinement, max_points)))


@dataclass(frozen=True)
class OscillationVector:
    """Depth-p oscillation sums over the n**k level-k cells.

    ``norm1`` is the plain sum of all subcell oscillations, so it equals
    ``oscillation_sum(model, k + p, refinement)`` exactly.
    """

    k: int
    p: int
    refinement: int
    entries: np.ndarray
    norm1: float

    def __post_init__(self):
        self.entries.setflags(write=False)


def oscillation_vector(
    model: FifModel,
    k: int,
    p: int,
    refinement: int = DEFAULT_REFINEMENT,
    max_points: int = MAX_GRID_POINTS,
) -> OscillationVector:
    if p < 1:
        raise ValueError("depth p must be >= 1")
    sub = _cell_oscillations(model, k + p, refinement, max_points)
    entries = sub.reshape(model.n**k, model.n**p).sum(axis=1)
    return OscillationVector(k, p, refinement, entries, float(np.sum(sub)))


# ---------------------------------------------------------------------------
# certified gap between sampled and true oscillations


def _scaling_abs_max_per_cell(model: FifModel, i: int, lo, hi) -> np.ndarray:
    s = model.scaling[i]
    form = cf.canonicalize(s.ast, s.domain)
    if form is not None:
        fmin, fmax = cf.form_range_vec(form, lo, hi)
        return np.maximum(np.abs(fmin), np.abs(fmax))
    return np.full(len(lo), max_abs_witness(s)[0].hi)


def _offset_osc_per_cell(model: FifModel, i: int, lo, hi, width: float) -> np.ndarray:
    q = model.offsets[i]
    form = cf.canonicalize(q.ast, q.domain)
    if form is not None:
        fmin, fmax = cf.form_range_vec(form, lo, hi)
        return fmax - fmin
    return np.full(len(lo), lipschitz_bound(q) * width)


def _osc_upper_cells(model: FifModel, level: int, bounds: EngineBounds) -> np.ndarray:
    """Certified upper bounds on the oscillation of f over every level
    cell, by pushing the whole-interval bound through the maps."""
    n = model.n
    span = model.span
    cap = 2.0 * bounds.m_f
    c = np.array([cap])
    for m in range(1, level + 1):
        edges = model.grid(m - 1)
        lo, hi = edges[:-1], edges[1:]
        width = span * float(n) ** (-(m - 1))
        blocks = []
        for i in range(n):
            smax = _scaling_abs_max_per_cell(model, i, lo, hi)
            qosc = _offset_osc_per_cell(model, i, lo, hi, width)
            blocks.append(smax * c + qosc + bounds.beta * width)
        c = np.minimum(np.concatenate(blocks), cap)
    return c


def oscillation_gap(
    model: FifModel,
    k: int,
    refinement: int,
    bounds: EngineBounds | None = None,
) -> float:
    """Certified upper bound on O_k(f, I) minus the sampled estimate."""
    if bounds is None:
        bounds = engine_bounds(model)
    fine = _osc_upper_cells(model, k + refinement, bounds)
    per_cell = fine.reshape(model.n**k, model.n**refinement).max(axis=1)
    return float(2.0 * per_cell.sum())


def oscillation_vector_gap(
    model: FifModel,
    k: int,
    p: int,
    refinement: int,
    bounds: EngineBounds | None = None,
) -> np.ndarray:
    """Per-entry certified gaps for :func:`oscillation_vector`."""
    if bounds is None:
        bounds = engine_bounds(model)
    fine = _osc_upper_cells(model, k + p + refinement, bounds)
    per_sub = fine.reshape(model.n ** (k + p), model.n**refinement).max(axis=1)
    return 2.0 * per_sub.reshape(model.n**k, model.n**p).sum(axis=1)


# ---------------------------------------------------------------------------
# divergence certificates


class Verdict(Enum):
    DIVERGENT = "divergent"
    BOUNDED = "bounded"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class DivergenceCertificate:
    """Outcome of the variation-divergence test.

    When ``verdict`` is DIVERGENT, the recorded O_{k0} estimate (itself a
    lower bound of the true oscillation sum) exceeds ``threshold``, which
    proves Var(f, I) is infinite.  BOUNDED is only claimed when the sum
    function stays below 1 and the oscillation sums have stabilized.
    """

    verdict: Verdict
    k0: int | None
    threshold: float | None
    criterion: str | None  # "general" | "nonnegative"
    o_values: tuple[float, ...]
    thresholds: dict
    refinement: int
    reason: str = ""

    @property
    def divergent(self) -> bool:
        return self.verdict is Verdict.DIVERGENT


def _sum_offsets(model: FifModel) -> ExprFunction:
    ast = model.offsets[0].ast
    for q in model.offsets[1:]:
        ast = Add(ast, q.ast)
    return ExprFunction(ast, model.interval)


def divergence_check(
    model: FifModel,
    k_max: int,
    refinement: int = 0,
    gamma: SumFunctionSummary | None = None,
    bounds: EngineBounds | None = None,
    max_points: int = MAX_GRID_POINTS,
) -> DivergenceCertificate:
    """Scan O_k for k <= k_max against the applicable thresholds.

    The reported k0 is the smallest crossing observed at the given
    refinement; deeper refinements may certify an earlier k0, and any
    crossing is a valid certificate.  Absence of a crossing below k_max
    is inconclusive and reported as UNDETERMINED unless the bounded
    criteria apply.
    """
    if gamma is None:
        gamma = gamma_summary(model, k_max=1)
    if bounds is None:
        bounds = engine_bounds(model)
    o_values = tuple(
        oscillation_sum(model, k, refinement, max_points) for k in range(1, k_max + 1)
    )
    thresholds: dict = {}
    gamma_lower = gamma.gamma_lower_star_enclosure.lo
    if gamma_lower > 1.0:
        var_q = sum(variation_upper(q) for q in model.offsets)
        thresholds["general"] = (
            2.0 * bounds.m_f * bounds.lambda_s * model.n * model.span + var_q
        ) / (gamma_lower - 1.0)
        if all(interval_extrema(s)[0].lo >= 0.0 for s in model.scaling):
            var_sum_q = variation_upper(_sum_offsets(model))
            thresholds["nonnegative"] = (
                gamma.lipschitz_gamma * bounds.m_f * model.span + var_sum_q
            ) / (gamma_lower - 1.0)
    if thresholds:
        criterion = min(thresholds, key=thresholds.get)
        threshold = thresholds[criterion]
        for k, o in enumerate(o_values, start=1):
            if o > threshold:
                return DivergenceCertificate(
                    Verdict.DIVERGENT, k, threshold, criterion, o_values, thresholds, refinement
                )
    stabilized = len(o_values) >= 3 and max(o_values[-3:]) - min(o_values[-3:]) < 1e-9
    if gamma.gamma_star_enclosure.hi < 1.0 and stabilized:
        return DivergenceCertificate(
            Verdict.BOUNDED,
            None,
            None,
            None,
            o_values,
            thresholds,
            refinement,
            reason="max gamma < 1 and oscillation sums stabilized",
        )
    if not thresholds:
        reason = "divergence criterion needs certified min gamma > 1"
    else:
        reason = f"no crossing of threshold {min(thresholds.values()):.6g} up to k_max={k_max}"
    return DivergenceCertificate(
        Verdict.UNDETERMINED, None, None, None, o_values, thresholds, refinement, reason=reason
    )
