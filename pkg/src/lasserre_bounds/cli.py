"""Command-line experiment runner.

Subcommands: bound, ratio, rate, needle-table, moments-dump. Series files
are CSV (header row, ``%.17g`` numbers) or JSON {"config", "series"}.
Exit status 2 signals a configuration error and 3 a numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import _mp
from .bounds import ConvexBody, needle_bound_details, rate_fit, upper_bound_series
from .domains import Ball, MeasureSpec, check_compatible
from .errors import ConvergedExactly, IncompatibleMeasureError, LasserreError, NumericalError, PreconditionError
from .estimators import lipschitz_estimator, linear_estimator_on_ball, quadratic_estimator, recentre
from .moments import MomentOracle, _exponents
from .needles import InteriorCone, half_needle, integrate_against, lambda_lower, needle
from .poly import smoothness_constants
from .registry import RegistryError, grid_minimum, resolve_domain, resolve_function, resolve_measure

R_MAX_CAP = 24
SERIES_COLUMNS = ("r", "bound", "error", "residual", "wall_ms")
NEEDLE_COLUMNS = SERIES_COLUMNS + ("h", "in_regime")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    function: str | dict
    domain: str | dict
    measure: str = "lebesgue"
    lam: float | None = None
    r_max: int = 10
    engine: str = "eigen"
    estimator: str | None = None
    output: str | None = None
    format: str = "csv"
    precision_bits: int = _mp.DEFAULT_PRECISION
    regime: str = "convex"
    beta: float = 2.0
    recentre: bool = False
    f_min: float | None = None
    omit_timing: bool = False
    seed: int = 0

    def validate(self) -> None:
        if not 1 <= self.r_max <= R_MAX_CAP:
            raise ConfigError(f"r_max must lie in [1, {R_MAX_CAP}]")
        if self.engine not in ("eigen", "needle", "both"):
            raise ConfigError("engine must be eigen, needle or both")
        if self.estimator not in (None, "quadratic", "linear", "lipschitz"):
            raise ConfigError("estimator must be quadratic, linear or lipschitz")
        if self.estimator == "lipschitz" and self.engine != "needle":
            raise ConfigError("the Lipschitz estimator is not a polynomial; use --engine needle")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.regime not in ("convex", "interior"):
            raise ConfigError("regime must be convex or interior")
        if self.precision_bits < 53:
            raise ConfigError("precision must be at least 53 bits")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)


@dataclass
class Experiment:
    """A validated configuration with its resolved objects."""

    config: ExperimentConfig
    domain_name: str
    domain: object
    measure: MeasureSpec
    entry: object
    f_min: float
    minimizer: np.ndarray
    f_min_source: str = "registry"
    notes: list = field(default_factory=list)


def prepare(config: ExperimentConfig) -> Experiment:
    config.validate()
    try:
        name, domain = resolve_domain(config.domain)
        measure = resolve_measure(config.measure, config.lam, domain)
        check_compatible(domain, measure)
        entry = resolve_function(config.function, name, domain)
    except (RegistryError, IncompatibleMeasureError, LasserreError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    source = "registry"
    minimizer = np.array(entry.minimizers[0]) if entry.minimizers else None
    f_min = entry.f_min
    if config.f_min is not None:
        f_min, source = float(config.f_min), "config"
    elif math.isnan(f_min):
        f_min, minimizer = grid_minimum(entry.poly, domain)
        source = "grid"
    if minimizer is None:
        minimizer = grid_minimum(entry.poly, domain)[1]
    return Experiment(config, name, domain, measure, entry, f_min, minimizer, source)


def _objective(exp: Experiment):
    """The polynomial (or estimator) the engines see, with its domain, minimizer and minimum."""
    cfg = exp.config
    f, d, a, f_min = exp.entry.poly, exp.domain, np.asarray(exp.minimizer, dtype=float), exp.f_min
    if cfg.estimator == "quadratic":
        gamma = smoothness_constants(f, d, 50).gamma
        f = quadratic_estimator(f, a, gamma).g
    elif cfg.estimator == "linear":
        if not isinstance(d, Ball):
            raise ConfigError("the linear estimator needs a ball domain")
        gamma = smoothness_constants(f, d, 50).gamma
        try:
            f = linear_estimator_on_ball(f, a, gamma, centre=d.centre, radius=d.radius).g
        except PreconditionError as exc:
            raise ConfigError(str(exc)) from None
    return f, d, a, f_min


def run_eigen(exp: Experiment) -> list[dict]:
    cfg = exp.config
    f, d, a, f_min = _objective(exp)
    if cfg.recentre:
        f_min = f_min - f(a)
        f, d, _ = recentre(f, d, a)
    series = upper_bound_series(f, d, exp.measure, cfg.r_max, f_min, precision_bits=cfg.precision_bits)
    rows = []
    for res, err in zip(series.results, series.errors):
        rows.append(
            {
                "r": res.r,
                "bound": res.value,
                "error": float(err),
                "residual": res.residual,
                "wall_ms": 0.0 if cfg.omit_timing else res.wall_ms,
            }
        )
        if res.residual > 1e-6:
            raise NumericalError(f"eigen residual {res.residual:.3g} at r={res.r}")
    return rows


def run_needle(exp: Experiment) -> list[dict]:
    cfg = exp.config
    if exp.measure.kind != "lebesgue":
        raise ConfigError("needle bounds use the Lebesgue measure")
    f, d, a = exp.entry.poly, exp.domain, np.asarray(exp.minimizer, dtype=float)
    ft, dt, _ = recentre(f, d, a)
    offset = exp.entry.poly(a) - exp.f_min
    regime = ConvexBody() if cfg.regime == "convex" else InteriorCone(cfg.beta)
    if cfg.estimator == "lipschitz":
        beta = smoothness_constants(ft, dt, 50).beta
        g = lipschitz_estimator(ft, np.zeros(d.n_vars), beta)
    oracle = MomentOracle(dt)
    rows = []
    for r in range(2, cfg.r_max + 1):
        t0 = time.perf_counter()
        nb = needle_bound_details(ft, dt, np.zeros(d.n_vars), r, regime, strict=False, oracle=oracle)
        value = nb.value
        if cfg.estimator == "lipschitz":
            num, mass = integrate_against(nb.density, g, oracle, f_degree=max(ft.degree(), 1))
            value = num / mass
        bound = value + exp.entry.poly(a)
        rows.append(
            {
                "r": r,
                "bound": bound,
                "error": value + offset,
                "residual": float("nan"),
                "wall_ms": 0.0 if cfg.omit_timing else 1000 * (time.perf_counter() - t0),
                "h": nb.h,
                "in_regime": int(nb.in_regime),
            }
        )
    return rows


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % float(v)


def rows_to_csv(rows: list[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def render(exp: Experiment, rows: list[dict], columns: Sequence[str], extra: dict | None = None) -> str:
    if exp.config.format == "csv":
        return rows_to_csv(rows, columns)
    doc = {
        "config": exp.config.to_json(),
        "f_min": exp.f_min,
        "f_min_source": exp.f_min_source,
        "series": [{c: _json_safe(row[c]) for c in columns} for row in rows],
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2) + "\n"


def _emit(text: str, path: str | None) -> None:
    if path:
        write_atomic(path, text)
    else:
        sys.stdout.write(text)


def _sibling(path: str | None, tag: str) -> str | None:
    if path is None:
        return None
    root, ext = os.path.splitext(path)
    return f"{root}-{tag}{ext}"


def run(config: ExperimentConfig) -> int:
    """Run one bound experiment and write its artifact; returns the exit status."""
    exp = prepare(config)
    if config.engine in ("eigen", "both"):
        _emit(render(exp, run_eigen(exp), SERIES_COLUMNS), config.output)
    if config.engine in ("needle", "both"):
        path = config.output if config.engine == "needle" else _sibling(config.output, "needle")
        _emit(render(exp, run_needle(exp), NEEDLE_COLUMNS), path)
    return 0


def ratio_rows(errors_a: dict[int, float], errors_b: dict[int, float], tail: int = 5) -> tuple[list[dict], dict]:
    rows = []
    for r in sorted(set(errors_a) & set(errors_b)):
        ea, eb = errors_a[r], errors_b[r]
        ratio = ea / eb if eb > 0 else float("nan")
        rows.append({"r": r, "error_a": ea, "error_b": eb, "ratio": ratio})
    finite = [row["ratio"] for row in rows[-tail:] if math.isfinite(row["ratio"])]
    if finite:
        mean = float(np.mean(finite))
        stdev = float(np.std(finite, ddof=1)) if len(finite) > 1 else 0.0
        cv = stdev / abs(mean) if mean != 0 else float("nan")
    else:
        mean = stdev = cv = float("nan")
    return rows, {"tail_mean": mean, "tail_stdev": stdev, "tail_cv": cv, "tail_count": len(finite)}


def _series_errors(config: ExperimentConfig) -> dict[int, float]:
    exp = prepare(config)
    rows = run_eigen(exp)
    return {row["r"]: row["error"] for row in rows}


def ratio_report(config_a: ExperimentConfig, config_b: ExperimentConfig) -> tuple[list[dict], dict]:
    return ratio_rows(_series_errors(config_a), _series_errors(config_b))


def rate_report(config: ExperimentConfig, window: tuple[int, int], ceiling: float | None = None) -> dict:
    errors = _series_errors(config)
    out = {"r_lo": window[0], "r_hi": window[1]}
    try:
        slope, stderr = rate_fit(errors, window)
    except ConvergedExactly:
        out.update(slope=float("nan"), stderr=float("nan"), status="converged_exactly")
        return out
    status = "ok"
    if ceiling is not None and slope > ceiling:
        status = "violates_ceiling"
    out.update(slope=slope, stderr=stderr, status=status)
    return out


# argument parsing


def _add_common(p: argparse.ArgumentParser, function_required: bool = True) -> None:
    p.add_argument("--function", required=function_required, help="registry name, constant<c>, x4 or JSON polynomial")
    p.add_argument("--domain", required=function_required, help="registry name or JSON domain")
    p.add_argument("--measure", default="lebesgue", choices=["lebesgue", "chebyshev", "jacobi"])
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="Jacobi exponent")
    p.add_argument("--r-max", type=int, default=10)
    p.add_argument("--precision-bits", type=int, default=_mp.DEFAULT_PRECISION)
    p.add_argument("--recentre", action="store_true", help="recentre at the registered minimizer first")
    p.add_argument("--f-min", type=float, default=None, help="override the registered minimum")
    p.add_argument("--output", default=None)
    p.add_argument("--format", default="csv", choices=["csv", "json"])
    p.add_argument("--omit-timing", action="store_true", help="write wall_ms as 0 for byte-stable output")
    p.add_argument("--seed", type=int, default=0)


def _config_from_args(args, **overrides) -> ExperimentConfig:
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                obj = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        try:
            return ExperimentConfig.from_json(obj)
        except TypeError as exc:
            raise ConfigError(f"bad config: {exc}") from None
    if args.function is None or args.domain is None:
        raise ConfigError("--function and --domain are required without --config")
    kw = dict(
        function=args.function,
        domain=args.domain,
        measure=args.measure,
        lam=args.lam,
        r_max=args.r_max,
        output=args.output,
        format=args.format,
        precision_bits=args.precision_bits,
        recentre=args.recentre,
        f_min=args.f_min,
        omit_timing=args.omit_timing,
        seed=args.seed,
    )
    for key in ("engine", "estimator", "regime", "beta"):
        if hasattr(args, key):
            kw[key] = getattr(args, key)
    kw.update(overrides)
    return ExperimentConfig(**kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lasserre-bounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="bound series for one (function, domain, measure) cell")
    _add_common(b, function_required=False)
    b.add_argument("--config", default=None, help="JSON experiment config (overrides other flags)")
    b.add_argument("--engine", default="eigen", choices=["eigen", "needle", "both"])
    b.add_argument("--estimator", default=None, choices=["quadratic", "linear", "lipschitz"])
    b.add_argument("--regime", default="convex", choices=["convex", "interior"])
    b.add_argument("--beta", type=float, default=2.0, help="interior cone exponent for --regime interior")

    r = sub.add_parser("ratio", help="E_A^(r) / E_B^(r) for two cells")
    _add_common(r)
    r.add_argument("--versus-domain", required=True)
    r.add_argument("--versus-measure", default="lebesgue", choices=["lebesgue", "chebyshev", "jacobi"])
    r.add_argument("--versus-lambda", type=float, default=None)

    t = sub.add_parser("rate", help="log-log slope of E^(r) over a window")
    _add_common(t)
    t.add_argument("--window", type=int, nargs=2, default=None, metavar=("R_LO", "R_HI"))
    t.add_argument("--ceiling", type=float, default=None, help="flag slopes above this value")

    n = sub.add_parser("needle-table", help="needle, half-needle and Lambda on a grid")
    n.add_argument("--r", type=int, required=True)
    n.add_argument("--h", type=float, required=True)
    n.add_argument("--points", type=int, default=201)
    n.add_argument("--output", default=None)

    m = sub.add_parser("moments-dump", help="moment table of a (domain, measure) pair")
    m.add_argument("--domain", required=True)
    m.add_argument("--measure", default="lebesgue", choices=["lebesgue", "chebyshev", "jacobi"])
    m.add_argument("--lambda", dest="lam", type=float, default=None)
    m.add_argument("--degree", type=int, default=4)
    m.add_argument("--precision-bits", type=int, default=_mp.DEFAULT_PRECISION)
    m.add_argument("--output", default=None)
    return parser


def _cmd_ratio(args) -> int:
    a = _config_from_args(args)
    b = _config_from_args(args, domain=args.versus_domain, measure=args.versus_measure, lam=args.versus_lambda)
    rows, tail = ratio_report(a, b)
    cols = ("r", "error_a", "error_b", "ratio")
    if a.format == "json":
        text = json.dumps(
            {"config_a": a.to_json(), "config_b": b.to_json(), "series": [{k: _json_safe(v) for k, v in row.items()} for row in rows], "tail": tail},
            indent=2,
        ) + "\n"
    else:
        text = rows_to_csv(rows, cols)
        sys.stderr.write("tail mean %.6g stdev %.6g cv %.4f\n" % (tail["tail_mean"], tail["tail_stdev"], tail["tail_cv"]))
    _emit(text, a.output)
    return 0


def _cmd_rate(args) -> int:
    cfg = _config_from_args(args)
    window = tuple(args.window) if args.window else (max(1, cfg.r_max // 2), cfg.r_max)
    if not (1 <= window[0] < window[1] <= cfg.r_max):
        raise ConfigError("window must satisfy 1 <= R_LO < R_HI <= r_max")
    out = rate_report(cfg, window, args.ceiling)
    out = {"function": str(cfg.function), "domain": str(cfg.domain), "measure": cfg.measure, **out}
    cols = ("function", "domain", "measure", "r_lo", "r_hi", "slope", "stderr", "status")
    if cfg.format == "json":
        text = json.dumps({k: _json_safe(v) for k, v in out.items()}, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerow([out[c] if isinstance(out[c], str) else _fmt(out[c]) for c in cols])
        text = buf.getvalue()
    _emit(text, cfg.output)
    return 0


def _cmd_needle_table(args) -> int:
    if args.r < 0 or not 0 < args.h < 1 or args.points < 2:
        raise ConfigError("need r >= 0, 0 < h < 1 and at least 2 points")
    t = np.linspace(0, 1, args.points)
    rows = [
        {
            "t": float(ti),
            "nu": float(needle(args.r, args.h, ti)),
            "kappa": float(half_needle(args.r, args.h, ti)),
            "Lambda": float(lambda_lower(4 * args.r, ti)),
            "envelope": 4 * math.exp(-args.r * args.h / 2),
        }
        for ti in t
    ]
    _emit(rows_to_csv(rows, ("t", "nu", "kappa", "Lambda", "envelope")), args.output)
    return 0


def _cmd_moments(args) -> int:
    try:
        _, domain = resolve_domain(args.domain)
        measure = resolve_measure(args.measure, args.lam, domain)
        oracle = MomentOracle(domain, measure, args.precision_bits)
    except (RegistryError, LasserreError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    n = domain.n_vars
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"alpha{i + 1}" for i in range(n)] + ["value"])
    for alpha in _exponents(n, args.degree):
        w.writerow(list(alpha) + [_fmt(oracle.moment(alpha))])
    _emit(buf.getvalue(), args.output)
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bound":
            return run(_config_from_args(args))
        if args.command == "ratio":
            return _cmd_ratio(args)
        if args.command == "rate":
            return _cmd_rate(args)
        if args.command == "needle-table":
            return _cmd_needle_table(args)
        return _cmd_moments(args)
    except (ConfigError, RegistryError, PreconditionError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
