"""Model definition, hypothesis validation, and built-in examples.

A model is the data set plus, for each of the N maps, a vertical scaling
function and an offset function.  Validation checks uniform knots, the
contractivity of every scaling function via certified maxima of their
absolute values, and the endpoint matching conditions that make the
attractor a continuous interpolant of the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .analysis import max_abs_witness, variation_upper
from .errors import ExpressionError, ModelValidationError
from .expressions import (
    Add,
    Div,
    ExprFunction,
    Num,
    Var,
    parse_expr,
    piecewise_linear,
    substitute,
    to_source,
)

__all__ = [
    "InterpolationData",
    "FifModel",
    "ModelConfig",
    "Violation",
    "validate_model",
    "builtin_model",
    "BUILTIN_NAMES",
    "ENDPOINT_TOL",
]

ENDPOINT_TOL = 1e-9

BUILTIN_NAMES = ("example61", "weierstrass", "affine")


@dataclass(frozen=True)
class InterpolationData:
    """Uniform-knot data set: n segments over [x0, xn], values y_0..y_n.

    Endpoints are exact rationals so knot arithmetic (and hence grid
    indexing) carries no float drift.
    """

    n: int
    x0: Fraction
    xn: Fraction
    y: tuple[float, ...]

    def knot(self, i: int) -> Fraction:
        return self.x0 + Fraction(i, self.n) * (self.xn - self.x0)

    @property
    def interval(self) -> tuple[float, float]:
        return float(self.x0), float(self.xn)

    @property
    def span(self) -> float:
        return float(self.xn - self.x0)


@dataclass(frozen=True)
class FifModel:
    """Validated interpolation model; immutable and shareable."""

    data: InterpolationData
    scaling: tuple[ExprFunction, ...]
    offsets: tuple[ExprFunction, ...]
    name: str = "custom"

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def interval(self) -> tuple[float, float]:
        return self.data.interval

    @property
    def span(self) -> float:
        return self.data.span

    def grid(self, k: int) -> np.ndarray:
        """Level-k grid coordinates (n**k + 1 points).

        Computed as x0 + (j / n**k) * span so that a point shared between
        levels gets the same float at every level.
        """
        m = self.n**k
        x0, _ = self.interval
        return x0 + (np.arange(m + 1) / float(m)) * self.span

    def map_x(self, i: int, x):
        """L_i: [x0, xn] -> [x_{i-1}, x_i] (i is 1-based)."""
        x0, _ = self.interval
        return (np.asarray(x) - x0) / self.n + float(self.data.knot(i - 1))

    def map_y(self, i: int, x, y):
        """F_i(x, y) = S_i(x) * y + q_i(x) (i is 1-based)."""
        return self.scaling[i - 1](x) * y + self.offsets[i - 1](x)


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int | None
    message: str

    def __str__(self) -> str:
        where = f" (i={self.index})" if self.index is not None else ""
        return f"{self.kind}{where}: {self.message}"


FunctionSpec = "str | Sequence[tuple[float, float]]"


@dataclass(frozen=True)
class ModelConfig:
    """Declarative model description prior to validation.

    Scaling and offset entries are expression strings, or point lists for
    piecewise-linear tables.
    """

    n: int
    interval: tuple[float, float]
    y: tuple[float, ...]
    scaling: tuple
    offsets: tuple
    knots: tuple[float, ...] | None = None
    name: str = "custom"
    notes: tuple[str, ...] = field(default=())


def _build_function(entry, interval, what: str) -> ExprFunction:
    if isinstance(entry, str):
        return parse_expr(entry, interval)
    try:
        return piecewise_linear(entry, interval)
    except ExpressionError:
        raise
    except Exception as exc:  # malformed point list
        raise ExpressionError(f"bad {what} table: {exc}") from exc


def validate_model(config: ModelConfig, endpoint_tol: float = ENDPOINT_TOL) -> FifModel:
    """Check every model hypothesis; returns the model or raises
    :class:`ModelValidationError` carrying all violations found."""
    violations: list[Violation] = []
    n = config.n
    if n < 2:
        violations.append(Violation("bad-shape", None, f"need at least 2 maps, got {n}"))
        raise ModelValidationError(violations)
    x0f, xnf = float(config.interval[0]), float(config.interval[1])
    if not (math.isfinite(x0f) and math.isfinite(xnf) and x0f < xnf):
        violations.append(Violation("bad-shape", None, f"invalid interval [{x0f}, {xnf}]"))
        raise ModelValidationError(violations)
    if len(config.y) != n + 1:
        violations.append(
            Violation("bad-shape", None, f"expected {n + 1} y-values, got {len(config.y)}")
        )
        raise ModelValidationError(violations)
    if len(config.scaling) != n or len(config.offsets) != n:
        violations.append(
            Violation(
                "bad-shape",
                None,
                f"expected {n} scaling and offset functions, got "
                f"{len(config.scaling)} and {len(config.offsets)}",
            )
        )
        raise ModelValidationError(violations)

    if config.knots is not None:
        knots = [float(t) for t in config.knots]
        span = xnf - x0f
        if len(knots) != n + 1:
            violations.append(
                Violation("non-uniform-knots", None, f"expected {n + 1} knots, got {len(knots)}")
            )
        else:
            h = span / n
            for i, t in enumerate(knots):
                if abs(t - (x0f + i * h)) > 1e-12 * max(1.0, abs(span)):
                    violations.append(
                        Violation(
                            "non-uniform-knots",
                            i,
                            f"knot {t!r} deviates from uniform position {x0f + i * h!r}",
                        )
                    )
                    break
        if violations:
            raise ModelValidationError(violations)

    interval = (x0f, xnf)
    scaling: list[ExprFunction | None] = []
    offsets: list[ExprFunction | None] = []
    for i in range(n):
        for specs, out, what in ((config.scaling, scaling, "scaling"), (config.offsets, offsets, "offset")):
            try:
                out.append(_build_function(specs[i], interval, what))
            except ExpressionError as exc:
                violations.append(Violation("expression-error", i + 1, f"{what}: {exc}"))
                out.append(None)
    if violations:
        raise ModelValidationError(violations)

    for i, s in enumerate(scaling):
        bound, witness = max_abs_witness(s)
        if bound.lo >= 1.0:
            violations.append(
                Violation(
                    "scaling-not-contractive",
                    i + 1,
                    f"certified max |S_{i + 1}| = {bound.lo:.6g} >= 1 near x in "
                    f"[{witness[0]:.6g}, {witness[1]:.6g}]",
                )
            )
        elif bound.hi >= 1.0:
            violations.append(
                Violation(
                    "scaling-not-contractive",
                    i + 1,
                    f"max |S_{i + 1}| enclosure [{bound.lo:.6g}, {bound.hi:.6g}] reaches 1 "
                    "(tolerance not met; tighten the expression or the budget)",
                )
            )

    for i, q in enumerate(offsets):
        v = variation_upper(q)
        if not math.isfinite(v):
            violations.append(
                Violation("expression-error", i + 1, "offset has no finite variation bound")
            )

    y = tuple(float(v) for v in config.y)
    for i in range(1, n + 1):
        s, q = scaling[i - 1], offsets[i - 1]
        r0 = s(x0f) * y[0] + q(x0f) - y[i - 1]
        r1 = s(xnf) * y[n] + q(xnf) - y[i]
        if abs(r0) > endpoint_tol:
            violations.append(
                Violation("endpoint-mismatch", i, f"left condition residual {r0:.3e}")
            )
        if abs(r1) > endpoint_tol:
            violations.append(
                Violation("endpoint-mismatch", i, f"right condition residual {r1:.3e}")
            )

    if violations:
        raise ModelValidationError(violations)

    data = InterpolationData(n, Fraction(x0f), Fraction(xnf), y)
    return FifModel(data, tuple(scaling), tuple(offsets), config.name)


# ---------------------------------------------------------------------------
# built-in models


def _shifted_offset_source(phi: ExprFunction, i: int, n: int) -> str:
    # q_i(x) = phi((x + i - 1) / n)
    ast = substitute(phi.ast, Div(Add(Var(), Num(float(i - 1))), Num(float(n))))
    return to_source(ast)


def _weierstrass_knot_values(phi: ExprFunction, n: int, lam: float, tol: float = 1e-15):
    """Knot values of sum(lam**k * phi(n**k x)) by truncated summation.

    Arguments are reduced mod 1 in exact rational arithmetic, treating phi
    as the 1-periodic extension of its values on [0, 1].
    """
    bound, _ = max_abs_witness(phi)
    phimax = max(bound.hi, 1.0)
    y = []
    for i in range(n + 1):
        r = Fraction(i, n)
        first = True
        total = 0.0
        coeff = 1.0
        k = 0
        while coeff * phimax / (1.0 - lam) >= tol and k < 10_000:
            # evaluate phi at the argument itself the first time (so x = 1
            # uses phi(1)), then at its exact fractional part
            total += coeff * phi(float(r) if first else float(r % 1))
            first = False
            r = (n * r) % 1
            coeff *= lam
            k += 1
        y.append(total)
    return tuple(y)


def builtin_model(name: str, params: Mapping | None = None) -> ModelConfig:
    """Bundled model configurations: ``example61``, ``weierstrass``,
    ``affine``.

    weierstrass params: n (default 3), ``lambda`` (or ``lam``), phi
    (expression text, default "cos(2*pi*x)").  affine params: n, y, d
    (constant scaling factors), interval.
    """
    params = dict(params or {})
    if name == "example61":
        s_up = "1/2 + sin(2*pi*x)/4"
        s_dn = "1/2 - sin(2*pi*x)/4"
        phi = parse_expr("cos(2*pi*x)")
        offsets = tuple(_shifted_offset_source(phi, i, 3) for i in (1, 2, 3))
        # knot values of the attractor: y_0 = y_3 = 2, y_1 = y_2 = 1/2
        return ModelConfig(
            n=3,
            interval=(0.0, 1.0),
            y=(2.0, 0.5, 0.5, 2.0),
            scaling=(s_up, s_up, s_dn),
            offsets=offsets,
            name="example61",
        )
    if name == "weierstrass":
        n = int(params.pop("n", 3))
        lam = params.pop("lambda", params.pop("lam", None))
        if lam is None:
            raise ValueError("weierstrass needs a 'lambda' parameter")
        lam = float(lam)
        phi_src = str(params.pop("phi", "cos(2*pi*x)"))
        if params:
            raise ValueError(f"unknown weierstrass parameters: {sorted(params)}")
        if not (0.0 < lam < 1.0):
            raise ValueError(f"lambda must lie in (0, 1), got {lam}")
        phi = parse_expr(phi_src)
        notes = []
        if not (1.0 / n < lam):
            notes.append(
                f"lambda = {lam} <= 1/n = {1 / n:.6g}: the graph has box dimension 1"
            )
        if abs(phi(0.0) - phi(1.0)) > 1e-9:
            notes.append("phi(0) != phi(1): 1-periodic extension is discontinuous")
        y = _weierstrass_knot_values(phi, n, lam)
        lam_src = repr(lam)
        return ModelConfig(
            n=n,
            interval=(0.0, 1.0),
            y=y,
            scaling=tuple(lam_src for _ in range(n)),
            offsets=tuple(_shifted_offset_source(phi, i, n) for i in range(1, n + 1)),
            name=f"weierstrass(n={n}, lambda={lam})",
            notes=tuple(notes),
        )
    if name == "affine":
        n = int(params.pop("n"))
        y = tuple(float(v) for v in params.pop("y"))
        d = tuple(float(v) for v in params.pop("d"))
        interval = tuple(float(v) for v in params.pop("interval", (0.0, 1.0)))
        if params:
            raise ValueError(f"unknown affine parameters: {sorted(params)}")
        if len(y) != n + 1 or len(d) != n:
            raise ValueError(f"affine needs {n + 1} y-values and {n} factors")
        x0, xn = interval
        offsets = []
        for i in range(1, n + 1):
            # affine q_i through the two endpoint conditions
            c0 = y[i - 1] - d[i - 1] * y[0]
            c1 = y[i] - d[i - 1] * y[n]
            slope = (c1 - c0) / (xn - x0)
            intercept = c0 - slope * x0
            offsets.append(f"{slope!r}*x + {intercept!r}")
        return ModelConfig(
            n=n,
            interval=interval,
            y=y,
            scaling=tuple(repr(v) for v in d),
            offsets=tuple(offsets),
            name=f"affine(n={n})",
        )
    raise ValueError(f"unknown builtin {name!r}; expected one of {BUILTIN_NAMES}")
