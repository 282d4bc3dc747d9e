"""Exact evaluation of the interpolant on uniform n-adic grids.

Values at level k are produced by one refinement sweep per level: every
level-(k-1) grid point x with known f(x) yields f(L_i(x)) = S_i(x) f(x) +
q_i(x) for each map i, covering every level-k point exactly once.  Knot
values are pinned to the data at every level, and shared points between
blocks take the left map's value after asserting both maps agree, so a
level's restriction to the previous grid reproduces it bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import lipschitz_bound, max_abs_witness
from .errors import CapacityError, InternalInconsistencyError
from .model import FifModel

__all__ = [
    "GridValues",
    "EngineBounds",
    "grid_values",
    "sample_graph",
    "engine_bounds",
    "MAX_GRID_POINTS",
]

MAX_GRID_POINTS = 2**24


@dataclass(frozen=True)
class GridValues:
    """f on the level-k grid: n**k + 1 values, endpoints equal to the data."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def __len__(self) -> int:
        return len(self.values)


def _check_capacity(model: FifModel, k: int, max_points: int) -> None:
    if model.n**k > max_points:
        raise CapacityError(
            f"level {k} needs {model.n ** k + 1} points, budget is {max_points + 1}"
        )


def _check_overlaps(model: FifModel) -> None:
    """Both maps meeting at an interior knot must produce the same value."""
    x0, xn = model.interval
    y = model.data.y
    n = model.n
    for m in range(1, n):
        left = model.scaling[m - 1](xn) * y[n] + model.offsets[m - 1](xn)
        right = model.scaling[m](x0) * y[0] + model.offsets[m](x0)
        if abs(left - right) > 2e-9:
            raise InternalInconsistencyError(
                f"maps {m} and {m + 1} disagree at knot {m}: {left!r} vs {right!r}"
            )


def grid_values(model: FifModel, k: int, max_points: int = MAX_GRID_POINTS) -> GridValues:
    """Exact values of f at the n**k + 1 level-k grid points."""
    if k < 0:
        raise ValueError("level must be >= 0")
    _check_capacity(model, k, max_points)
    y = np.asarray(model.data.y, dtype=float)
    if k == 0:
        return GridValues(0, np.array([y[0], y[-1]]))
    if k == 1:
        return GridValues(1, y.copy())
    _check_overlaps(model)
    n = model.n
    values = y.copy()
    for level in range(2, k + 1):
        m = n ** (level - 1)
        t = model.grid(level - 1)
        new = np.empty(n * m + 1)
        # descending blocks: shared points keep the left map's value
        for i in reversed(range(n)):
            new[i * m : (i + 1) * m + 1] = model.scaling[i](t) * values + model.offsets[i](t)
        new[np.arange(n + 1) * m] = y  # pin knots to the data
        values = new
    return GridValues(k, values)


def sample_graph(model: FifModel, k: int, max_points: int = MAX_GRID_POINTS) -> np.ndarray:
    """(x, f(x)) pairs on the level-k grid, ascending in x."""
    if k < 1:
        raise ValueError("level must be >= 1")
    gv = grid_values(model, k, max_points)
    return np.column_stack([model.grid(k), gv.values])


@dataclass(frozen=True)
class EngineBounds:
    """A-priori bounds used by thresholds and gap estimates.

    m_f bounds max |f|; q_star and s_star are the certified maxima of the
    offset and scaling magnitudes; beta = 2 * m_f * lambda_s controls how
    oscillation passes through one map application.
    """

    m_f: float
    q_star: float
    s_star: float
    lambda_s: float
    beta: float


def engine_bounds(model: FifModel, refine: bool = False, refine_level: int = 10) -> EngineBounds:
    """Compute the five a-priori bounds.

    By default m_f is the geometric-series bound q*/(1 - S*) (floored by
    max |y_i|).  With ``refine=True`` it is intersected with a certified
    grid bound: max |f| on a fine grid plus a per-cell oscillation tail.
    """
    q_star = max(max_abs_witness(q)[0].hi for q in model.offsets)
    s_star = max(max_abs_witness(s)[0].hi for s in model.scaling)
    lambda_s = max(lipschitz_bound(s) for s in model.scaling)
    y_max = max(abs(v) for v in model.data.y)
    m_f = max(q_star / (1.0 - s_star), y_max)
    if refine:
        level = min(refine_level, 22 // max(1, model.n.bit_length() - 1))
        gv = grid_values(model, level)
        lq = max(lipschitz_bound(q) for q in model.offsets)
        beta0 = 2.0 * m_f * lambda_s
        cell = 2.0 * m_f  # oscillation bound over level-j cells
        for j in range(1, level + 1):
            cell = s_star * cell + (lq + beta0) * model.span * model.n ** (-(j - 1))
        m_f = min(m_f, float(np.abs(gv.values).max()) + cell)
        m_f = max(m_f, y_max)
    beta = 2.0 * m_f * lambda_s
    return EngineBounds(m_f, q_star, s_star, lambda_s, beta)
