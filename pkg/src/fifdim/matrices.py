"""Vertical scaling matrices, spectral radii, and sum-function bounds.

The level-k matrices are n**k x n**k nonnegative matrices with exactly n
structural entries per row: row (i-1)*n**(k-1) + l holds the extrema of
|S_i| over the level-k cells (l-1)*n+1 .. l*n.  Their spectral radii
squeeze the growth rate of oscillation sums from both sides, so the upper
radii decrease in k, the lower ones increase, and both converge.

Radii are computed by power iteration on (M + I) from the all-ones vector;
each iteration yields a rigorous Collatz-Wielandt bracket (min and max of
the component ratios), so even an unconverged result is an enclosure.
Reducible patterns fall back to one power iteration per strongly
connected component.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import canonical as cf
from .analysis import (
    IntervalBound,
    interval_extrema,
    interval_extrema_abs,
    lipschitz_bound,
)
from .errors import CapacityError
from .expressions import Add, Call, ExprFunction
from .model import FifModel

__all__ = [
    "ScalingMatrix",
    "RadiusResult",
    "PatternClass",
    "SpectralSummary",
    "SumFunctionSummary",
    "build_matrix",
    "spectral_radius",
    "primitivity_check",
    "gamma_summary",
    "rho_sequence",
    "MAX_MATRIX_DIM",
    "EIG_TOL",
    "EIG_MAX_ITER",
]

MAX_MATRIX_DIM = 2**20
EIG_TOL = 1e-8
EIG_MAX_ITER = 100_000


@dataclass(frozen=True)
class ScalingMatrix:
    """Sparse level-k scaling matrix.

    ``entries[i, j]`` is the basic entry for map i+1 over cell j+1
    (enclosure midpoint); ``widths`` records the enclosure widths (all
    zero when extrema were closed-form).  The full matrix never needs to
    be materialized: row (i, l) has support exactly on columns l*n ..
    l*n + n - 1 with values entries[i, l*n : l*n + n].
    """

    k: int
    n: int
    kind: str  # "upper" | "lower"
    entries: np.ndarray  # shape (n, n**k)
    widths: np.ndarray  # shape (n, n**k)

    def __post_init__(self):
        self.entries.setflags(write=False)
        self.widths.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.n**self.k

    @property
    def certified(self) -> bool:
        return bool(np.all(self.widths <= 1e-9))

    @property
    def uncertified_count(self) -> int:
        return int(np.sum(self.widths > 1e-9))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        blocks = self.entries.reshape(self.n, self.n ** (self.k - 1), self.n)
        xr = x.reshape(self.n ** (self.k - 1), self.n)
        return np.einsum("ilj,lj->il", blocks, xr).ravel()

    def positive_mask(self) -> np.ndarray:
        """Entries certified strictly positive (enclosure lower end > 0)."""
        return (self.entries - 0.5 * self.widths) > 0.0

    def radius_slack(self) -> float:
        """Bound on how far entry enclosures can move the spectral radius
        (max row sum of half-widths); zero for closed-form entries."""
        half = 0.5 * self.widths.reshape(self.n, self.n ** (self.k - 1), self.n)
        return float(half.sum(axis=2).max())

    def row_support(self, row: int) -> range:
        l = row % (self.n ** (self.k - 1))
        return range(l * self.n, (l + 1) * self.n)

    def to_dense(self) -> np.ndarray:
        dim = self.dim
        dense = np.zeros((dim, dim))
        m = self.n ** (self.k - 1)
        for i in range(self.n):
            for l in range(m):
                dense[i * m + l, l * self.n : (l + 1) * self.n] = self.entries[
                    i, l * self.n : (l + 1) * self.n
                ]
        return dense

    def iter_coordinates(self):
        """Yield (row, col, value) for every structural entry."""
        m = self.n ** (self.k - 1)
        for i in range(self.n):
            for l in range(m):
                for t in range(self.n):
                    yield i * m + l, l * self.n + t, float(self.entries[i, l * self.n + t])


def build_matrix(
    model: FifModel,
    k: int,
    kind: str,
    tol: float = 1e-12,
    max_dim: int = MAX_MATRIX_DIM,
    threads: int = 1,
) -> ScalingMatrix:
    """Basic entries are certified extrema of |S_i| over the level-k cells;
    closed-form shapes give exact entries (width 0)."""
    if kind not in ("upper", "lower"):
        raise ValueError(f"kind must be 'upper' or 'lower', got {kind!r}")
    if k < 1:
        raise ValueError("level must be >= 1")
    if model.n**k > max_dim:
        raise CapacityError(f"matrix dimension {model.n ** k} exceeds budget {max_dim}")
    lo_edges = model.grid(k)[:-1]
    hi_edges = model.grid(k)[1:]
    n_cells = model.n**k
    entries = np.empty((model.n, n_cells))
    widths = np.zeros((model.n, n_cells))
    want_max = kind == "upper"
    for i, s in enumerate(model.scaling):
        form = cf.canonicalize(s.ast, s.domain)
        if form is not None:
            fmin, fmax = cf.form_range_vec(form, lo_edges, hi_edges)
            amax = np.maximum(np.abs(fmin), np.abs(fmax))
            amin = np.where(fmin * fmax <= 0.0, 0.0, np.minimum(np.abs(fmin), np.abs(fmax)))
            entries[i] = amax if want_max else amin
        else:
            def one_cell(j, s=s, i=i):
                mn, mx = interval_extrema_abs(s, (lo_edges[j], hi_edges[j]), tol, budget=10_000)
                b = mx if want_max else mn
                return j, b

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    results = list(pool.map(one_cell, range(n_cells)))
            else:
                results = [one_cell(j) for j in range(n_cells)]
            for j, b in results:
                entries[i, j] = b.mid
                widths[i, j] = b.width
    return ScalingMatrix(k, model.n, kind, entries, widths)


# ---------------------------------------------------------------------------
# pattern diagnostics


class PatternClass(Enum):
    PRIMITIVE = "primitive"
    IRREDUCIBLE_NOT_PRIMITIVE = "irreducible-not-primitive"
    REDUCIBLE = "reducible"


def _neighbors_factory(m):
    """Adjacency function over the pattern of strictly positive entries."""
    if isinstance(m, ScalingMatrix):
        mask = m.positive_mask()
        n, mk1 = m.n, m.n ** (m.k - 1)

        def neighbors(r: int):
            i, l = divmod(r, mk1)
            base = l * n
            return [base + t for t in range(n) if mask[i, base + t]]

        return neighbors, m.dim
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")

    def neighbors(r: int):
        return list(np.nonzero(a[r] > 0.0)[0])

    return neighbors, a.shape[0]


def _tarjan_scc(neighbors, dim: int) -> list[list[int]]:
    """Strongly connected components, iterative Tarjan."""
    index = [-1] * dim
    low = [0] * dim
    on_stack = [False] * dim
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0
    for root in range(dim):
        if index[root] != -1:
            continue
        work = [(root, iter(neighbors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(neighbors(w))))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def _graph_period(neighbors, nodes: list[int]) -> int:
    """gcd of cycle lengths of a strongly connected subgraph."""
    node_set = set(nodes)
    depth = {nodes[0]: 0}
    order = [nodes[0]]
    head = 0
    g = 0
    while head < len(order):
        u = order[head]
        head += 1
        for v in neighbors(u):
            if v not in node_set:
                continue
            if v not in depth:
                depth[v] = depth[u] + 1
                order.append(v)
            else:
                g = math.gcd(g, depth[u] + 1 - depth[v])
    return abs(g) if g else 0


def primitivity_check(m) -> PatternClass:
    """Classify the positive-entry pattern.

    Irreducibility is strong connectivity of the pattern digraph;
    primitivity additionally requires the gcd of cycle lengths to be 1.
    """
    neighbors, dim = _neighbors_factory(m)
    sccs = _tarjan_scc(neighbors, dim)
    if len(sccs) != 1:
        return PatternClass.REDUCIBLE
    comp = sccs[0]
    if len(comp) == 1 and comp[0] not in neighbors(comp[0]):
        return PatternClass.REDUCIBLE  # single node without a self-loop
    period = _graph_period(neighbors, comp)
    if period == 1:
        return PatternClass.PRIMITIVE
    return PatternClass.IRREDUCIBLE_NOT_PRIMITIVE


# ---------------------------------------------------------------------------
# spectral radius


@dataclass(frozen=True)
class RadiusResult:
    """Spectral radius with its Collatz-Wielandt bracket."""

    value: float
    lower: float
    upper: float
    converged: bool
    iterations: int

    def __float__(self) -> float:
        return self.value


def _power_radius(matvec, dim, tol, max_iter, mask=None) -> RadiusResult:
    if mask is None:
        x = np.ones(dim)
        sel = slice(None)
    else:
        x = mask.astype(float)
        sel = mask
    lo = hi = 0.0
    for it in range(1, max_iter + 1):
        y = matvec(x) + x  # shift by the identity keeps iterates positive
        if mask is not None:
            y = np.where(mask, y, 0.0)
        ratios = y[sel] / x[sel]
        lo = float(ratios.min()) - 1.0
        hi = float(ratios.max()) - 1.0
        x = y / y.sum()
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol * max(abs(mid), 1e-12):
            return RadiusResult(mid, lo, hi, True, it)
    return RadiusResult(0.5 * (lo + hi), lo, hi, False, max_iter)


def _entry(m, r: int, c: int) -> float:
    if isinstance(m, ScalingMatrix):
        i, l = divmod(r, m.n ** (m.k - 1))
        return float(m.entries[i, c]) if c in m.row_support(r) else 0.0
    return float(np.asarray(m)[r, c])


def spectral_radius(m, tol: float = EIG_TOL, max_iter: int = EIG_MAX_ITER) -> RadiusResult:
    """Spectral radius of a nonnegative matrix to relative accuracy tol.

    Power iteration on (M + I) with an all-ones start; the sup/inf ratio
    bracket certifies the enclosure each step.  Reducible patterns are
    decomposed into strongly connected components, whose radii are
    combined by maximum.
    """
    if isinstance(m, ScalingMatrix):
        matvec = m.matvec
        dim = m.dim
    else:
        a = np.asarray(m, dtype=float)
        if np.any(a < 0.0):
            raise ValueError("matrix must be nonnegative")
        matvec = lambda x: a @ x
        dim = a.shape[0]
    neighbors, _ = _neighbors_factory(m)
    sccs = _tarjan_scc(neighbors, dim)
    if len(sccs) == 1:
        return _power_radius(matvec, dim, tol, max_iter)
    # block-triangular structure: the radius is the max over the components
    subs = []
    for comp in sccs:
        if len(comp) == 1:
            r = comp[0]
            val = _entry(m, r, r)
            subs.append(RadiusResult(val, val, val, True, 0))
        else:
            mask = np.zeros(dim, dtype=bool)
            mask[comp] = True
            subs.append(_power_radius(matvec, dim, tol, max_iter, mask))
    return RadiusResult(
        value=max(s.value for s in subs),
        lower=max(s.lower for s in subs),
        upper=max(s.upper for s in subs),
        converged=all(s.converged for s in subs),
        iterations=max(s.iterations for s in subs),
    )


# ---------------------------------------------------------------------------
# sum function and radius sequences


@dataclass(frozen=True)
class SumFunctionSummary:
    """Extrema and per-level bounds for gamma(x) = sum_i |S_i(x)|."""

    gamma_star: float
    gamma_lower_star: float
    gamma_star_enclosure: IntervalBound
    gamma_lower_star_enclosure: IntervalBound
    gamma_upper_k: tuple[float, ...]
    gamma_lower_k: tuple[float, ...]
    lipschitz_gamma: float
    constant: bool

    @property
    def constant_value(self) -> float | None:
        return 0.5 * (self.gamma_star + self.gamma_lower_star) if self.constant else None


def _gamma_form(model: FifModel):
    """Canonical form of gamma when |S_i| combine exactly, else None."""
    lo, hi = model.interval
    total = cf.ConstForm(0.0)
    for s in model.scaling:
        form = cf.canonicalize(s.ast, s.domain)
        if form is None:
            return None
        aform = cf._abs_form(form, lo, hi)
        if aform is None:
            return None
        combined = cf._add(total, aform, lo, hi)
        if combined is None:
            return None
        total = combined
    return total


def gamma_summary(model: FifModel, k_max: int = 6, tol: float = 1e-12) -> SumFunctionSummary:
    """Certified extrema of the sum function plus the per-level column
    bounds from the scaling matrices."""
    lo, hi = model.interval
    form = _gamma_form(model)
    if form is not None:
        gmin, gmax = cf.form_range(form, lo, hi)
        enc_min = IntervalBound(gmin, gmin)
        enc_max = IntervalBound(gmax, gmax)
        lip = cf.form_lipschitz(form, lo, hi)
    else:
        ast = Call("abs", model.scaling[0].ast)
        for s in model.scaling[1:]:
            ast = Add(ast, Call("abs", s.ast))
        gamma_fn = ExprFunction(ast, (lo, hi))
        enc_min, enc_max = interval_extrema(gamma_fn, tol=tol)
        lip = sum(lipschitz_bound(s) for s in model.scaling)
    upper_k = []
    lower_k = []
    for k in range(1, k_max + 1):
        up = build_matrix(model, k, "upper")
        dn = build_matrix(model, k, "lower")
        upper_k.append(float((up.entries + 0.5 * up.widths).sum(axis=0).max()))
        lower_k.append(float((dn.entries - 0.5 * dn.widths).sum(axis=0).min()))
    constant = (enc_max.hi - enc_min.lo) < 1e-12
    return SumFunctionSummary(
        gamma_star=enc_max.mid,
        gamma_lower_star=enc_min.mid,
        gamma_star_enclosure=enc_max,
        gamma_lower_star_enclosure=enc_min,
        gamma_upper_k=tuple(upper_k),
        gamma_lower_k=tuple(lower_k),
        lipschitz_gamma=lip,
        constant=constant,
    )


@dataclass(frozen=True)
class SpectralSummary:
    """Radii of both matrix families for k = 1..K and their limits.

    The limit estimates are the deepest bracket; the optional geometric
    extrapolation of the last gaps is heuristic and never feeds rigorous
    bounds.
    """

    radii: tuple[tuple[int, RadiusResult, RadiusResult], ...]
    rho_star_upper: float
    rho_star_lower: float
    bracket: tuple[float, float]
    rho_s: float | None
    tol: float
    monotonicity_violations: tuple[str, ...]
    extrapolated: dict | None
    entry_slack: tuple[float, float] = (0.0, 0.0)  # deepest (upper, lower) matrices

    @property
    def deepest_k(self) -> int:
        return self.radii[-1][0]


def rho_sequence(
    model: FifModel,
    k_max: int,
    tol: float = EIG_TOL,
    max_dim: int = MAX_MATRIX_DIM,
    bracket_tol: float | None = None,
    threads: int = 1,
) -> SpectralSummary:
    """Radii tables for k = 1..k_max with monotonicity checks.

    Violations beyond numerical slack indicate extrema or eigensolver
    bugs and are reported rather than silently accepted.  rho_s (the
    common limit) is reported when the deepest bracket is narrower than
    ``bracket_tol`` (default max(10 * tol, 1e-3)); the bracket width then
    caps the uncertainty of any dimension value derived from it.
    """
    if bracket_tol is None:
        bracket_tol = max(10.0 * tol, 1e-3)
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    rows = []
    violations = []
    prev_up = prev_dn = None
    entry_slack = (0.0, 0.0)
    for k in range(1, k_max + 1):
        up = build_matrix(model, k, "upper", max_dim=max_dim, threads=threads)
        dn = build_matrix(model, k, "lower", max_dim=max_dim, threads=threads)
        r_up = spectral_radius(up, tol)
        r_dn = spectral_radius(dn, tol)
        entry_slack = (up.radius_slack(), dn.radius_slack())
        slack = 2.0 * tol * max(1.0, r_up.value) + sum(entry_slack)
        if prev_up is not None and r_up.value > prev_up + slack:
            violations.append(
                f"rho_upper({k}) = {r_up.value:.12g} exceeds rho_upper({k - 1}) = {prev_up:.12g}"
            )
        if prev_dn is not None and r_dn.value < prev_dn - slack:
            violations.append(
                f"rho_lower({k}) = {r_dn.value:.12g} drops below rho_lower({k - 1}) = {prev_dn:.12g}"
            )
        if r_dn.value > r_up.value + slack:
            violations.append(f"rho_lower({k}) exceeds rho_upper({k})")
        prev_up, prev_dn = r_up.value, r_dn.value
        rows.append((k, r_up, r_dn))
    bracket = (rows[-1][2].value, rows[-1][1].value)
    width = bracket[1] - bracket[0]
    rho_s = 0.5 * (bracket[0] + bracket[1]) if width < bracket_tol else None
    extrapolated = None
    if len(rows) >= 3:
        ups = [r[1].value for r in rows[-3:]]
        dns = [r[2].value for r in rows[-3:]]
        extrapolated = {}
        for key, seq in (("rho_star_upper", ups), ("rho_star_lower", dns)):
            d0, d1 = seq[1] - seq[0], seq[2] - seq[1]
            if d0 != 0.0 and 0.0 < d1 / d0 < 1.0:
                r = d1 / d0
                extrapolated[key] = seq[2] + d1 * r / (1.0 - r)
        extrapolated = {**extrapolated, "heuristic": True} if extrapolated else None
    return SpectralSummary(
        radii=tuple(rows),
        rho_star_upper=rows[-1][1].value,
        rho_star_lower=rows[-1][2].value,
        bracket=bracket,
        rho_s=rho_s,
        tol=tol,
        monotonicity_violations=tuple(violations),
        extrapolated=extrapolated,
        entry_slack=entry_slack,
    )
