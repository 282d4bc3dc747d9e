"""Command-line front end.

Commands: validate, eval, osc, matrices, rho, dim, boxcount, reproduce.
Payload files (CSV/JSON) are deterministic: identical invocations produce
byte-identical output.  Wall-clock timings and the run report go to
stderr so they never perturb the payloads.

Exit codes: 0 success, 2 validation failure, 3 capacity exceeded,
4 internal inconsistency.

Config files are TOML with sections [model] (n, interval or knots, y),
[scaling] (s1..sN) and [offsets] (q1..qN, or the shorthand
``weierstrass = "<phi expression>"`` meaning q_i(x) = phi((x+i-1)/n)).
Entries are expression strings or [[x, y], ...] tables.  Builtins are
addressed as ``builtin:example61`` or with parameters, e.g.
``builtin:weierstrass?n=3&lambda=0.6``.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__
from .dimension import assemble_verdict, boxcount_dimension, dim_bounds_gamma, dim_bounds_rho
from .engine import engine_bounds, sample_graph
from .errors import (
    CapacityError,
    FifdimError,
    InsufficientResolutionError,
    InternalInconsistencyError,
    ModelValidationError,
)
from .matrices import build_matrix, gamma_summary, rho_sequence
from .model import BUILTIN_NAMES, ModelConfig, builtin_model, validate_model
from .oscillation import divergence_check

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_INTERNAL = 4

# reference spectral radii for the bundled example61 model (five decimals,
# as recorded for k = 1, 2, 4, 5, 7, 8)
REFERENCE_RADII = {
    1: (1.95688, 1.05567),
    2: (1.68984, 1.33590),
    4: (1.53627, 1.49577),
    5: (1.52277, 1.50926),
    7: (1.51675, 1.51525),
    8: (1.51625, 1.51575),
}

# how the shared Lipschitz constant for the scaling family is defined
LIPSCHITZ_SCOPE = "max-over-scaling-functions"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _parse_builtin_params(query: str) -> dict:
    params = {}
    for item in query.split("&"):
        if not item:
            continue
        key, _, raw = item.partition("=")
        if "," in raw:
            params[key] = [float(tok) for tok in raw.split(",")]
            continue
        try:
            params[key] = int(raw)
        except ValueError:
            try:
                params[key] = float(raw)
            except ValueError:
                params[key] = raw
    return params


def load_config(source: str) -> ModelConfig:
    """Load a model config from a TOML file or a ``builtin:`` address."""
    if source.startswith("builtin:"):
        rest = source[len("builtin:") :]
        name, _, query = rest.partition("?")
        if name not in BUILTIN_NAMES:
            raise ModelValidationError(
                [f"unknown builtin {name!r}; expected one of {BUILTIN_NAMES}"]
            )
        try:
            return builtin_model(name, _parse_builtin_params(query))
        except (ValueError, KeyError) as exc:
            raise ModelValidationError([f"builtin {name}: {exc}"]) from exc
    with open(source, "rb") as fh:
        doc = tomllib.load(fh)
    try:
        model_sec = doc["model"]
        n = int(model_sec["n"])
        y = tuple(float(v) for v in model_sec["y"])
        knots = model_sec.get("knots")
        if knots is not None:
            knots = tuple(float(v) for v in knots)
            interval = (knots[0], knots[-1])
        else:
            interval = tuple(float(v) for v in model_sec["interval"])
        scaling_sec = doc.get("scaling", {})
        offsets_sec = doc.get("offsets", {})
        scaling = tuple(_config_entry(scaling_sec, f"s{i}") for i in range(1, n + 1))
        if "weierstrass" in offsets_sec:
            phi_src = str(offsets_sec["weierstrass"])
            offsets = tuple(
                f"({phi_src.replace('x', f'((x + {i - 1})/{n})')})" for i in range(1, n + 1)
            )
        else:
            offsets = tuple(_config_entry(offsets_sec, f"q{i}") for i in range(1, n + 1))
        return ModelConfig(
            n=n,
            interval=interval,
            y=y,
            scaling=scaling,
            offsets=offsets,
            knots=knots,
            name=str(model_sec.get("name", "custom")),
        )
    except KeyError as exc:
        raise ModelValidationError([f"config missing key {exc}"]) from exc


def _config_entry(section, key):
    if key not in section:
        raise ModelValidationError([f"config missing entry {key!r}"])
    value = section[key]
    if isinstance(value, str):
        return value
    return tuple((float(a), float(b)) for a, b in value)


def _config_hash(config: ModelConfig) -> str:
    payload = json.dumps(
        {
            "n": config.n,
            "interval": list(config.interval),
            "y": list(config.y),
            "scaling": [list(map(list, s)) if not isinstance(s, str) else s for s in config.scaling],
            "offsets": [list(map(list, q)) if not isinstance(q, str) else q for q in config.offsets],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class _Report:
    """Human-readable run report; written to stderr, never to payloads."""

    def __init__(self, command: str, config: ModelConfig | None, params: dict):
        self.command = command
        self.model = f"{config.name} ({_config_hash(config)})" if config else "-"
        self.params = params
        self.stages: list[tuple[str, float]] = []
        self._t0 = time.perf_counter()

    def stage(self, name: str) -> None:
        now = time.perf_counter()
        self.stages.append((name, now - self._t0))
        self._t0 = now

    def emit(self) -> None:
        print(f"# fifdim {__version__} | {self.command} | model {self.model}", file=sys.stderr)
        if self.params:
            items = ", ".join(f"{k}={v}" for k, v in self.params.items())
            print(f"# parameters: {items}", file=sys.stderr)
        print(f"# lipschitz scope: {LIPSCHITZ_SCOPE}", file=sys.stderr)
        for name, dt in self.stages:
            print(f"# stage {name}: {dt:.3f}s", file=sys.stderr)


def _write_payload(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    print(f"ok: {model.name}: n={model.n}, interval={list(model.interval)}")
    for note in config.notes:
        print(f"note: {note}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    report = _Report("eval", config, {"level": args.level})
    samples = sample_graph(model, args.level)
    report.stage("grid")
    buf = io.StringIO()
    buf.write("x,f\n")
    for x, v in samples:
        buf.write(f"{_fmt(x)},{_fmt(v)}\n")
    _write_payload(buf.getvalue(), args.out)
    report.emit()
    return EXIT_OK


def _cmd_osc(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    report = _Report("osc", config, {"kmax": args.kmax, "refine": args.refine})
    gamma = gamma_summary(model, k_max=1)
    bounds = engine_bounds(model)
    cert = divergence_check(model, args.kmax, args.refine, gamma, bounds)
    report.stage("certificate")
    rows = []
    for k, o in enumerate(cert.o_values, start=1):
        rows.append(
            {
                "k": k,
                "o_k": o,
                "threshold_general": cert.thresholds.get("general"),
                "threshold_nonnegative": cert.thresholds.get("nonnegative"),
                "verdict": cert.verdict.value,
            }
        )
    if args.format == "json":
        doc = {
            "refinement": cert.refinement,
            "verdict": cert.verdict.value,
            "k0": cert.k0,
            "threshold": cert.threshold,
            "criterion": cert.criterion,
            "rows": rows,
        }
        _write_payload(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        buf.write("k,O_k,threshold_general,threshold_nonnegative,verdict\n")
        for row in rows:
            tg = _fmt(row["threshold_general"]) if row["threshold_general"] is not None else ""
            tn = (
                _fmt(row["threshold_nonnegative"])
                if row["threshold_nonnegative"] is not None
                else ""
            )
            buf.write(f"{row['k']},{_fmt(row['o_k'])},{tg},{tn},{row['verdict']}\n")
        _write_payload(buf.getvalue(), args.out)
    report.stage("write")
    report.emit()
    if cert.verdict.value == "divergent":
        print(
            f"divergent: O_{cert.k0} = {cert.o_values[cert.k0 - 1]:.6g} > "
            f"threshold {cert.threshold:.6g} ({cert.criterion})",
            file=sys.stderr,
        )
    else:
        print(f"{cert.verdict.value}: {cert.reason}", file=sys.stderr)
    return EXIT_OK


def _cmd_matrices(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    report = _Report("matrices", config, {"level": args.level, "kind": args.kind})
    matrix = build_matrix(model, args.level, args.kind, threads=args.threads)
    report.stage("build")
    header = {
        "k": matrix.k,
        "kind": matrix.kind,
        "n": matrix.n,
        "dimension": matrix.dim,
        "max_enclosure_width": float(matrix.widths.max()),
        "certified": matrix.certified,
    }
    buf = io.StringIO()
    buf.write(json.dumps(header, sort_keys=True) + "\n")
    for r, c, v in matrix.iter_coordinates():
        buf.write(f"{r} {c} {_fmt(v)}\n")
    _write_payload(buf.getvalue(), args.out)
    report.emit()
    return EXIT_OK


def _cmd_rho(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    report = _Report("rho", config, {"kmax": args.kmax, "tol": args.tol})
    summary = rho_sequence(model, args.kmax, args.tol, threads=args.threads)
    report.stage("radii")
    if summary.monotonicity_violations:
        raise InternalInconsistencyError("; ".join(summary.monotonicity_violations))
    if args.format == "json":
        doc = {
            "radii": [
                {"k": k, "rho_upper": up.value, "rho_lower": dn.value}
                for k, up, dn in summary.radii
            ],
            "bracket": list(summary.bracket),
            "rho_s": summary.rho_s,
            "extrapolated": summary.extrapolated,
        }
        _write_payload(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        buf.write("k,rho_upper,rho_lower\n")
        for k, up, dn in summary.radii:
            buf.write(f"{k},{_fmt(up.value)},{_fmt(dn.value)}\n")
        _write_payload(buf.getvalue(), args.out)
    report.emit()
    print(
        f"bracket at k={summary.deepest_k}: [{summary.bracket[0]:.6f}, {summary.bracket[1]:.6f}]"
        + (f", rho_S = {summary.rho_s:.6f}" if summary.rho_s is not None else ""),
        file=sys.stderr,
    )
    return EXIT_OK


def _run_pipeline(model, config, args, report):
    """Shared gamma/rho/boxcount orchestration for cmd_dim."""
    gamma = gamma_summary(model, k_max=min(args.kmax, 6))
    report.stage("gamma")
    bounds = engine_bounds(model)
    cert = divergence_check(model, args.kmax, args.refine, gamma, bounds)
    report.stage("divergence")
    parts = []
    empirical = None
    if args.method in ("gamma", "all"):
        parts.append(dim_bounds_gamma(model, gamma, cert))
        report.stage("gamma-bounds")
    if args.method in ("rho", "all"):
        spectral = rho_sequence(model, args.kmax, args.tol, threads=args.threads)
        if spectral.monotonicity_violations:
            raise InternalInconsistencyError("; ".join(spectral.monotonicity_violations))
        parts.append(dim_bounds_rho(model, spectral, cert, gamma=gamma))
        report.stage("rho-bounds")
    if args.method in ("boxcount", "all"):
        k_hi = 9 if model.n**12 <= 2**22 else 7
        level = k_hi + 3
        samples = sample_graph(model, level)
        empirical = boxcount_dimension(samples, (4, k_hi), model.n)
        report.stage("boxcount")
        if args.method == "boxcount":
            parts.append(dim_bounds_gamma(model, gamma, cert))  # rigorous envelope
    return assemble_verdict(parts, empirical)


def _cmd_dim(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    report = _Report(
        "dim", config, {"method": args.method, "kmax": args.kmax, "tol": args.tol, "refine": args.refine}
    )
    verdict = _run_pipeline(model, config, args, report)
    doc = verdict.to_dict()
    doc["model"] = model.name
    doc["lipschitz_scope"] = LIPSCHITZ_SCOPE
    _write_payload(json.dumps(doc, indent=2) + "\n", args.out)
    report.emit()
    if verdict.exact:
        print(f"dim_B = {verdict.exact.value:.6f} ({verdict.exact.source})", file=sys.stderr)
    else:
        print(
            f"dim_B in [{verdict.lower.value:.6f}, {verdict.upper.value:.6f}]",
            file=sys.stderr,
        )
    return EXIT_OK


def _cmd_boxcount(args) -> int:
    config = load_config(args.config)
    model = validate_model(config)
    level = args.level if args.level else args.kmax + 3
    report = _Report(
        "boxcount", config, {"kmin": args.kmin, "kmax": args.kmax, "level": level}
    )
    samples = sample_graph(model, level)
    result = boxcount_dimension(samples, (args.kmin, args.kmax), model.n)
    report.stage("count")
    _write_payload(json.dumps(result.to_dict(), indent=2) + "\n", args.out)
    report.emit()
    print(f"estimate {result.estimate:.4f} (window {result.window:.4f})", file=sys.stderr)
    return EXIT_OK


def _cmd_reproduce(args) -> int:
    if args.name != "example61":
        print(f"unknown reproduction target {args.name!r}", file=sys.stderr)
        return EXIT_VALIDATION
    config = builtin_model("example61")
    model = validate_model(config)
    report = _Report("reproduce", config, {"kmax": 8})
    summary = rho_sequence(model, 8, 1e-8)
    report.stage("radii")
    print("k   rho_upper  ref_upper  delta      rho_lower  ref_lower  delta")
    for k, up, dn in summary.radii:
        if k not in REFERENCE_RADII:
            continue
        ref_up, ref_dn = REFERENCE_RADII[k]
        print(
            f"{k}   {up.value:.5f}    {ref_up:.5f}    {up.value - ref_up:+.2e}  "
            f"{dn.value:.5f}    {ref_dn:.5f}    {dn.value - ref_dn:+.2e}"
        )
    gamma = gamma_summary(model, k_max=1)
    bounds = engine_bounds(model)
    cert = divergence_check(model, 8, 0, gamma, bounds)
    verdict_rho = dim_bounds_rho(model, summary, cert, gamma=gamma)
    verdict = assemble_verdict([dim_bounds_gamma(model, gamma, cert), verdict_rho])
    report.stage("dimension")
    if cert.k0 is not None:
        print(
            f"divergence: O_{cert.k0} = {cert.o_values[cert.k0 - 1]:.5f} > "
            f"threshold {cert.threshold:.5f} ({cert.criterion})"
        )
    if verdict.exact:
        print(f"dim_B = {verdict.exact.value:.4f} via {verdict.exact.source}")
    else:
        print(f"dim_B in [{verdict.lower.value:.4f}, {verdict.upper.value:.4f}]")
    report.emit()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fifdim",
        description="Fractal interpolation functions and box-dimension estimates",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, kmax_default=8):
        p.add_argument("config", help="TOML config path or builtin:<name>[?k=v&...]")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--tol", type=float, default=1e-8, help="eigensolver tolerance")
        p.add_argument("--kmax", type=int, default=kmax_default)
        p.add_argument("--refine", type=int, default=None)
        p.add_argument("--threads", type=int, default=1, help="worker cap for bound computations")
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("validate", help="check model hypotheses")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("eval", help="CSV of graph samples on the level-k grid")
    add_common(p)
    p.add_argument("--level", type=int, default=8)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("osc", help="oscillation sums and divergence certificate")
    add_common(p)
    p.set_defaults(func=_cmd_osc, refine_default=4)

    p = sub.add_parser("matrices", help="export a scaling matrix in coordinate format")
    add_common(p)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--kind", choices=("upper", "lower"), default="upper")
    p.set_defaults(func=_cmd_matrices)

    p = sub.add_parser("rho", help="spectral radii table for k = 1..kmax")
    add_common(p)
    p.set_defaults(func=_cmd_rho)

    p = sub.add_parser("dim", help="dimension verdict JSON")
    add_common(p)
    p.add_argument("--method", choices=("gamma", "rho", "boxcount", "all"), default="all")
    p.set_defaults(func=_cmd_dim, refine_default=0)

    p = sub.add_parser("boxcount", help="empirical box-count estimate")
    add_common(p, kmax_default=9)
    p.add_argument("--kmin", type=int, default=4)
    p.add_argument("--level", type=int, default=None)
    p.set_defaults(func=_cmd_boxcount)

    p = sub.add_parser("reproduce", help="compare against the recorded reference table")
    p.add_argument("name", nargs="?", default="example61")
    p.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "refine") and args.refine is None:
        args.refine = getattr(args, "refine_default", 4)
    try:
        return args.func(args)
    except ModelValidationError as exc:
        for v in exc.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CapacityError, InsufficientResolutionError) as exc:
        print(f"capacity: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InternalInconsistencyError as exc:
        print(f"internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except FifdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
