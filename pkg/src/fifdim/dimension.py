"""Box-dimension bounds, exactness verdicts, and empirical box counting.

Two rigorous estimator families feed the verdict: the sum-function route
(extrema of gamma = sum |S_i|) and the matrix route (spectral radii of the
scaling matrices).  Each route's hypotheses are checked and recorded, and
a bound is only emitted when its hypotheses are certified; the direct
box-count estimator cross-validates but never tightens rigorous bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import ZeroCount, count_zeros, interval_extrema, interval_extrema_abs, vanishes_on_subinterval
from .engine import grid_values
from .errors import InsufficientResolutionError, InternalInconsistencyError
from .matrices import SpectralSummary, SumFunctionSummary, gamma_summary
from .model import FifModel
from .oscillation import DivergenceCertificate, Verdict, _sum_offsets

__all__ = [
    "Bound",
    "DimensionVerdict",
    "BoxCountResult",
    "dim_bounds_gamma",
    "dim_bounds_rho",
    "boxcount_dimension",
    "assemble_verdict",
]


@dataclass(frozen=True)
class Bound:
    value: float
    source: str  # "gamma-sum" | "rho-matrix" | "continuity" | "trivial" | ...
    detail: str = ""

    def to_dict(self) -> dict:
        d = {"value": self.value, "source": self.source}
        if self.detail:
            d["detail"] = self.detail
        return d


@dataclass(frozen=True)
class DimensionVerdict:
    """Assembled lower/upper bounds with provenance and hypothesis report.

    ``exact`` is set only when an exactness route had all hypotheses
    certified; it then agrees with both bounds up to solver tolerance.
    """

    lower: Bound
    upper: Bound
    exact: Bound | None
    hypotheses: dict
    notes: tuple[str, ...] = ()
    empirical: "BoxCountResult | None" = None

    def to_dict(self) -> dict:
        return {
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict(),
            "exact": self.exact.to_dict() if self.exact else None,
            "hypotheses": dict(self.hypotheses),
            "notes": list(self.notes),
            "empirical": self.empirical.to_dict() if self.empirical else None,
        }


def _is_constant_function(f, tol: float = 1e-12) -> bool:
    lo_b, hi_b = interval_extrema(f)
    return (hi_b.hi - lo_b.lo) <= tol


def _f_nonconstant(model: FifModel) -> bool:
    vals = grid_values(model, 3).values
    spread = float(vals.max() - vals.min())
    return spread > 1e-12 * max(1.0, float(np.abs(vals).max()))


def dim_bounds_gamma(
    model: FifModel,
    gamma: SumFunctionSummary,
    cert: DivergenceCertificate,
) -> DimensionVerdict:
    """Bounds from the sum-function extrema.

    Upper always holds; the lower bound needs min gamma > 1 plus a
    divergence certificate.  A certified-constant gamma upgrades the
    bounds to an exact value, with a constant offset sum substituting for
    the divergence hypothesis when gamma is constant.
    """
    log_n = math.log(model.n)
    g_hi = gamma.gamma_star_enclosure.hi
    g_lo = gamma.gamma_lower_star_enclosure.lo
    divergent = cert.verdict is Verdict.DIVERGENT
    bounded = cert.verdict is Verdict.BOUNDED
    sum_q_const = _is_constant_function(_sum_offsets(model))
    nonconstant = _f_nonconstant(model)

    hypotheses = {
        "min-gamma-gt-1": g_lo > 1.0,
        "variation-divergent": divergent if cert.verdict is not Verdict.UNDETERMINED else None,
        "gamma-constant": gamma.constant,
        "offsets-sum-constant": sum_q_const,
        "f-nonconstant": nonconstant,
    }

    upper_val = 1.0 if g_hi <= 0.0 else max(1.0, 1.0 + math.log(g_hi) / log_n)
    upper = Bound(upper_val, "gamma-sum", f"max gamma = {g_hi:.12g}")
    if g_lo > 1.0 and divergent:
        lower = Bound(1.0 + math.log(g_lo) / log_n, "gamma-sum", f"min gamma = {g_lo:.12g}")
    else:
        lower = Bound(1.0, "continuity")

    exact = None
    if upper.value <= 1.0:
        exact = Bound(1.0, "gamma-sum", "max gamma <= 1")
    elif gamma.constant:
        g0 = gamma.constant_value
        if g0 <= 1.0:
            exact = Bound(1.0, "constant-gamma", f"constant gamma = {g0:.12g} <= 1")
        elif divergent or (sum_q_const and nonconstant):
            why = "divergent variation" if divergent else "constant offset sum, f nonconstant"
            exact = Bound(1.0 + math.log(g0) / log_n, "constant-gamma",
                          f"constant gamma = {g0:.12g}, {why}")
            lower = Bound(exact.value, "constant-gamma")
            upper = Bound(exact.value, "constant-gamma")
        elif bounded:
            exact = Bound(1.0, "constant-gamma", "finite variation")
    elif bounded:
        exact = Bound(1.0, "gamma-sum", "finite variation")
        upper = Bound(1.0, "gamma-sum", "finite variation")

    return DimensionVerdict(lower, upper, exact, hypotheses)


def dim_bounds_rho(
    model: FifModel,
    spectral: SpectralSummary,
    cert: DivergenceCertificate,
    zero_counts: tuple[ZeroCount, ...] | None = None,
    gamma: SumFunctionSummary | None = None,
) -> DimensionVerdict:
    """Bounds from the scaling-matrix spectral radii.

    The upper bound needs every scaling function to be nonzero on every
    subinterval, the lower bound needs min gamma >= 1, finitely many
    zeros per scaling function, and divergent variation.  When all |S_i|
    are certified positive the two radius limits coincide, so a closed
    bracket plus a divergence verdict gives the exact dimension.
    """
    log_n = math.log(model.n)
    if zero_counts is None:
        zero_counts = tuple(count_zeros(s) for s in model.scaling)
    if gamma is None:
        gamma = gamma_summary(model, k_max=1)
    divergent = cert.verdict is Verdict.DIVERGENT
    bounded = cert.verdict is Verdict.BOUNDED

    no_vanish = not any(vanishes_on_subinterval(s) for s in model.scaling)
    finite_zeros = all(z.exact and z.finite for z in zero_counts)
    unknown_zeros = any(not z.exact for z in zero_counts)
    g_lo_ok = gamma.gamma_lower_star_enclosure.lo >= 1.0 - 1e-12
    strictly_positive = all(
        interval_extrema_abs(s)[0].lo > 0.0 for s in model.scaling
    )
    bracket_lo, bracket_hi = spectral.bracket

    hypotheses = {
        "scaling-nowhere-zero-on-subintervals": no_vanish,
        "scaling-finitely-many-zeros": None if unknown_zeros else finite_zeros,
        "min-gamma-ge-1": g_lo_ok,
        "variation-divergent": divergent if cert.verdict is not Verdict.UNDETERMINED else None,
        "scaling-strictly-positive": strictly_positive,
        "rho-bracket-closed": spectral.rho_s is not None,
    }

    notes = []
    deepest = spectral.radii[-1]
    slack_up, slack_dn = spectral.entry_slack
    if no_vanish:
        # certified end of the CW bracket, widened by entry enclosures
        ub = deepest[1].upper + slack_up
        upper_val = 1.0 if ub <= 0.0 else max(1.0, 1.0 + math.log(ub) / log_n)
        upper = Bound(upper_val, "rho-matrix",
                      f"rho_upper(k={deepest[0]}) = {deepest[1].value:.12g}")
    else:
        upper = Bound(2.0, "trivial", "a scaling function vanishes on a subinterval")
        notes.append("matrix upper bound omitted: a scaling function vanishes on a subinterval")

    lb = deepest[2].lower - slack_dn
    if g_lo_ok and finite_zeros and divergent and lb > 0.0:
        lower = Bound(max(1.0, 1.0 + math.log(lb) / log_n), "rho-matrix",
                      f"rho_lower(k={deepest[0]}) = {deepest[2].value:.12g}")
    else:
        lower = Bound(1.0, "continuity")
        missing = [
            name
            for name, ok in (
                ("min-gamma-ge-1", g_lo_ok),
                ("scaling-finitely-many-zeros", finite_zeros),
                ("variation-divergent", divergent),
            )
            if not ok
        ]
        if missing:
            notes.append("matrix lower bound omitted: " + ", ".join(missing))

    exact = None
    if strictly_positive and spectral.rho_s is not None:
        if bracket_hi <= 1.0:
            exact = Bound(1.0, "rho-bracket", f"rho_S = {spectral.rho_s:.12g} <= 1")
        elif divergent:
            exact = Bound(1.0 + math.log(spectral.rho_s) / log_n, "rho-bracket",
                          f"rho_S = {spectral.rho_s:.12g}")
        elif bounded:
            exact = Bound(1.0, "rho-bracket", "finite variation")

    return DimensionVerdict(lower, upper, exact, hypotheses, tuple(notes))


# ---------------------------------------------------------------------------
# direct box counting


@dataclass(frozen=True)
class BoxCountResult:
    """Empirical box-count estimate (annotation only, never rigorous).

    ``window`` is the spread of the per-step slopes across the fitted
    range, a rough indication of how settled the fit is.
    """

    estimate: float
    counts: tuple[tuple[int, int], ...]
    osc_estimates: tuple[tuple[int, float], ...]
    window: float
    k_range: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "counts": [[k, c] for k, c in self.counts],
            "oscillation_estimates": [[k, v] for k, v in self.osc_estimates],
            "window": self.window,
            "k_range": list(self.k_range),
        }


def boxcount_dimension(
    samples: np.ndarray, k_range: tuple[int, int], base: int
) -> BoxCountResult:
    """Least-squares box-count slope from graph samples.

    ``samples`` must be uniform-grid graph samples (base**L + 1 rows) at
    level L >= k_max + 2 so each column at the deepest counted scale is
    resolved.  Boxes are eps-coordinate squares anchored at the origin
    with eps_k = base**(-k) * span.
    """
    samples = np.asarray(samples, dtype=float)
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if k_lo < 1 or k_hi < k_lo:
        raise ValueError(f"bad k_range {k_range}")
    m = samples.shape[0] - 1
    level = round(math.log(m, base))
    if base**level != m:
        raise InsufficientResolutionError(f"{m + 1} samples is not base**L + 1 for base {base}")
    if level < k_hi + 2:
        raise InsufficientResolutionError(
            f"need samples at level >= {k_hi + 2}, got level {level}"
        )
    span = samples[-1, 0] - samples[0, 0]
    vals = samples[:, 1]
    counts = []
    osc_est = []
    for k in range(k_lo, k_hi + 1):
        per = base ** (level - k)
        body = vals[:-1].reshape(base**k, per)
        right = vals[per::per]
        cmax = np.maximum(body.max(axis=1), right)
        cmin = np.minimum(body.min(axis=1), right)
        eps = span * float(base) ** (-k)
        boxes = int(np.sum(np.floor(cmax / eps) - np.floor(cmin / eps) + 1.0))
        counts.append((k, boxes))
        osc = float(np.sum(cmax - cmin))
        osc_est.append((k, 1.0 + math.log(osc + 1.0) / (k * math.log(base))))
    xs = np.array([k * math.log(base) for k, _ in counts])
    ys = np.array([math.log(c) for _, c in counts])
    design = np.column_stack([xs, np.ones_like(xs)])
    slope = float(np.linalg.lstsq(design, ys, rcond=None)[0][0])
    steps = np.diff(ys) / np.diff(xs)
    window = float(steps.max() - steps.min()) if len(steps) else 0.0
    return BoxCountResult(slope, tuple(counts), tuple(osc_est), window, (k_lo, k_hi))


# ---------------------------------------------------------------------------
# assembly


def assemble_verdict(
    parts,
    empirical: BoxCountResult | None = None,
    tol: float = 1e-9,
) -> DimensionVerdict:
    """Merge partial verdicts: tightest valid bounds win, exactness only
    survives if consistent, and the empirical estimate only annotates."""
    parts = list(parts)
    if not parts:
        raise ValueError("need at least one partial verdict")
    lower = Bound(1.0, "continuity")
    upper = Bound(2.0, "trivial")
    hypotheses: dict = {}
    notes: list[str] = []
    exacts: list[Bound] = []
    for part in parts:
        if part.lower.value > lower.value:
            lower = part.lower
        if part.upper.value < upper.value:
            upper = part.upper
        hypotheses.update(part.hypotheses)
        notes.extend(part.notes)
        if part.exact is not None:
            exacts.append(part.exact)
    lower = Bound(min(max(lower.value, 1.0), 2.0), lower.source, lower.detail)
    upper = Bound(min(max(upper.value, 1.0), 2.0), upper.source, upper.detail)
    if lower.value > upper.value + tol:
        raise InternalInconsistencyError(
            f"lower bound {lower.to_dict()} exceeds upper bound {upper.to_dict()}; "
            f"parts: {[p.to_dict() for p in parts]}"
        )
    exact = None
    if exacts:
        spread = max(e.value for e in exacts) - min(e.value for e in exacts)
        if spread > 1e-6:
            raise InternalInconsistencyError(
                f"exact values disagree: {[e.to_dict() for e in exacts]}"
            )
        order = {"constant-gamma": 0, "gamma-sum": 1, "rho-bracket": 2}
        exact = sorted(exacts, key=lambda e: order.get(e.source, 9))[0]
        if exact.value < lower.value - tol or exact.value > upper.value + tol:
            raise InternalInconsistencyError(
                f"exact value {exact.to_dict()} outside [{lower.value}, {upper.value}]"
            )
    return DimensionVerdict(lower, upper, exact, hypotheses, tuple(notes), empirical)
