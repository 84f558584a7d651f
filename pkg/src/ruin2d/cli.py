"""Command-line front end.

Subcommands: ``classify``, ``bounds``, ``approx``, ``simulate``, ``pickands``,
``sweep``, ``verify``.  Records are emitted to stdout and, with ``--out``, to
a file with identical bytes; a wall-time diagnostic goes to stderr only, so
re-running a command with the same flags and seed reproduces output files
byte for byte.  JSON records are newline-delimited with a fixed key set
(17 significant digits); CSV uses 12 significant digits.

Exit codes: 0 success, 2 validation error, 3 numeric failure, 4 verify
failure.  The ``RUIN_THREADS`` environment variable caps Monte Carlo worker
processes.
"""

from __future__ import annotations

import argparse
import io
import math
import sys
import time

from . import verify as verify_mod
from .asymptotics import Regime, approximant, classify
from .errors import NumericalError, ParameterError
from .exact import ModelParams, independent_ruin, ruin_bounds
from .montecarlo import (
    MCConfig,
    MCEstimate,
    derive_tilt,
    estimate_pickands_constant,
    mc_ruin,
    mc_ruin_importance,
)

_RECORD_KEYS = (
    "command",
    "params",
    "regime",
    "estimator",
    "value",
    "std_error",
    "ci95",
    "lower",
    "upper",
    "amplification",
    "prefactor",
    "u_power",
)

_PARAM_KEYS = (
    "rho",
    "a",
    "u",
    "v",
    "c1",
    "c2",
    "horizon",
    "n",
    "grid",
    "seed",
    "delta",
    "tol",
)

_SWEEP_COLUMNS = (
    "axis_value",
    "regime",
    "exact_or_bound_lower",
    "bound_upper",
    "asymptotic_value",
    "mc_mean",
    "mc_se",
    "ratio_mc_over_asymptotic",
)


def _fmt_float(x: float, digits: int) -> str:
    if not math.isfinite(x):
        raise NumericalError(f"non-finite value in output: {x}")
    return f"{x:.{digits}g}"


def _json_value(v, digits: int = 17) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _fmt_float(v, digits)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x, digits) for x in v) + "]"
    if isinstance(v, dict):
        items = (f'"{k}": {_json_value(x, digits)}' for k, x in v.items())
        return "{" + ", ".join(items) + "}"
    raise TypeError(f"cannot serialize {type(v)}")


def _csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return _fmt_float(v, 12)
    s = str(v)
    if any(ch in s for ch in ',"\r\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


class _Emitter:
    """Collects record lines and writes them to stdout and the --out file."""

    def __init__(self, fmt: str, out_path: str | None):
        self.fmt = fmt
        self.out_path = out_path
        self.buf = io.StringIO()
        self._wrote_header = False

    def record(self, values: dict) -> None:
        full = {k: values.get(k) for k in _RECORD_KEYS}
        full["params"] = {k: values.get("params", {}).get(k) for k in _PARAM_KEYS}
        if self.fmt == "json":
            self.buf.write(_json_value(full) + "\n")
        else:
            flat = {k: v for k, v in full.items() if k not in ("params", "ci95")}
            row = dict(full["params"])
            row.update(flat)
            ci = full.get("ci95")
            row["ci_lo"] = ci[0] if ci else None
            row["ci_hi"] = ci[1] if ci else None
            cols = ("command", *_PARAM_KEYS, "regime", "estimator", "value",
                    "std_error", "ci_lo", "ci_hi", "lower", "upper",
                    "amplification", "prefactor", "u_power")
            if not self._wrote_header:
                self.buf.write(",".join(cols) + "\r\n")
                self._wrote_header = True
            self.buf.write(",".join(_csv_cell(row.get(c)) for c in cols) + "\r\n")

    def raw_table(self, header: tuple[str, ...], rows: list[dict]) -> None:
        if self.fmt == "json":
            for row in rows:
                self.buf.write(_json_value({k: row.get(k) for k in header}) + "\n")
        else:
            self.buf.write(",".join(header) + "\r\n")
            for row in rows:
                self.buf.write(",".join(_csv_cell(row.get(c)) for c in header) + "\r\n")

    def raw_text(self, text: str) -> None:
        self.buf.write(text)

    def flush(self) -> None:
        data = self.buf.getvalue()
        sys.stdout.write(data)
        sys.stdout.flush()
        if self.out_path:
            with open(self.out_path, "w", newline="") as fh:
                fh.write(data)


def _add_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="json",
                   help="record format")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="also write records to this file (same bytes as stdout)")


def _add_model_flags(p: argparse.ArgumentParser, need_u: bool = True) -> None:
    p.add_argument("--rho", type=float, required=False, default=None,
                   help="correlation of the coupled pair, in (-1, 1)")
    p.add_argument("--c1", type=float, default=0.0, help="premium rate of portfolio 1")
    p.add_argument("--c2", type=float, default=0.0, help="premium rate of portfolio 2")
    p.add_argument("--u", type=float, default=None, help="initial capital of portfolio 1")
    p.add_argument("--v", type=float, default=None, help="initial capital of portfolio 2")
    p.add_argument("--a", type=float, default=None,
                   help="capital ratio v/u in (0, 1]; alternative to --v")
    p.add_argument("--horizon", type=float, default=1.0, help="time horizon")


def _add_mc_flags(p: argparse.ArgumentParser, n_default: int, grid_default: int) -> None:
    p.add_argument("--n", type=int, default=n_default, help="Monte Carlo sample paths")
    p.add_argument("--grid", type=int, default=grid_default, help="time steps per path")
    p.add_argument("--seed", type=int, default=0, help="simulation seed")
    p.add_argument("--chunk", type=int, default=4096, help="paths per work chunk")
    p.add_argument("--dtype", choices=("float32", "float64"), default="float32",
                   help="path arithmetic precision")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ruin2d",
        description="Finite-time joint ruin probabilities for a correlated "
        "two-portfolio Brownian risk model: classification, formulas, bounds, "
        "asymptotics, and Monte Carlo.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="map (rho, a) to its asymptotic regime",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-9,
                   help="half-width for regime-boundary equality; the boundary "
                   "regimes are only reachable within this tolerance")
    p.add_argument("--paper-aa", action="store_true",
                   help="use the alternative critical-correlation form "
                   "(1-sqrt(a^2+8))/(4a) instead of (1-sqrt(1+8a^2))/(4a)")
    _add_output_flags(p)

    p = sub.add_parser("bounds", help="sandwich bounds for rho in (0, 1)",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_model_flags(p)
    _add_output_flags(p)

    p = sub.add_parser("approx", help="large-u asymptotic approximant",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-9, help="regime boundary tolerance")
    p.add_argument("--paper-aa", action="store_true",
                   help="use the alternative critical-correlation form")
    p.add_argument("--delta", type=float, default=8.0,
                   help="horizon for the regime-I constant estimate")
    _add_mc_flags(p, n_default=100_000, grid_default=4096)
    _add_output_flags(p)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of the joint ruin "
                       "probability (crude, or importance-sampled when a tilt "
                       "is given)",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_model_flags(p)
    _add_mc_flags(p, n_default=100_000, grid_default=16_384)
    p.add_argument("--tilt-mu1", type=float, default=None,
                   help="importance-sampling drift for coordinate 1")
    p.add_argument("--tilt-mu2", type=float, default=None,
                   help="importance-sampling drift for coordinate 2")
    _add_output_flags(p)

    p = sub.add_parser("pickands", help="simulation estimate of the regime-I "
                       "joint-exceedance constant",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--delta", type=float, default=8.0, help="truncation horizon")
    _add_mc_flags(p, n_default=100_000, grid_default=4096)
    _add_output_flags(p)

    p = sub.add_parser("sweep", help="sweep one axis and tabulate exact/bound, "
                       "asymptotic, and Monte Carlo values side by side",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--axis", choices=("u", "rho", "a"), required=True)
    p.add_argument("--values", required=True,
                   help="comma-separated, strictly monotone axis values "
                   "(use --values=-0.5,-0.2 for negative values)")
    _add_model_flags(p)
    p.add_argument("--tol", type=float, default=1e-9, help="regime boundary tolerance")
    p.add_argument("--paper-aa", action="store_true",
                   help="use the alternative critical-correlation form")
    p.add_argument("--delta", type=float, default=8.0,
                   help="horizon for regime-I constant estimates")
    _add_mc_flags(p, n_default=20_000, grid_default=16_384)
    p.add_argument("--format", choices=("csv", "json"), default="csv",
                   help="table format")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="also write the table to this file")

    p = sub.add_parser("verify", help="run the acceptance suite",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--level", choices=("quick", "full"), default="quick",
                   help="quick runs the closed-form/identity criteria; full "
                   "adds the Monte Carlo criteria")
    p.add_argument("--seed", type=int, default=1, help="seed for statistical criteria")
    p.add_argument("--mc-scale", type=float, default=1.0,
                   help="multiplier on Monte Carlo sample counts; 1.0 runs the "
                   "acceptance sizes as specified")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="also write the report to this file")
    return parser


def _resolve_uv(args) -> tuple[float, float]:
    if args.u is None:
        raise ParameterError("--u is required")
    if args.v is not None and args.a is not None:
        raise ParameterError("give either --v or --a, not both")
    if args.v is not None:
        return args.u, args.v
    if args.a is not None:
        if not 0.0 < args.a <= 1.0:
            raise ParameterError(f"--a must be in (0, 1], got {args.a}")
        return args.u, args.a * args.u
    raise ParameterError("one of --v or --a is required")


def _params_echo(args, **extra) -> dict:
    echo = {
        "rho": getattr(args, "rho", None),
        "a": getattr(args, "a", None),
        "u": getattr(args, "u", None),
        "v": getattr(args, "v", None),
        "c1": getattr(args, "c1", None),
        "c2": getattr(args, "c2", None),
        "horizon": getattr(args, "horizon", None),
        "n": getattr(args, "n", None),
        "grid": getattr(args, "grid", None),
        "seed": getattr(args, "seed", None),
        "delta": getattr(args, "delta", None),
        "tol": getattr(args, "tol", None),
    }
    echo.update(extra)
    return echo


def _mc_config(args, tilt=None) -> MCConfig:
    return MCConfig(
        n_samples=args.n,
        grid_points=args.grid,
        seed=args.seed,
        tilt=tilt,
        chunk_size=args.chunk,
        dtype=args.dtype,
    )


def _cmd_classify(args, emit: _Emitter) -> int:
    regime = classify(args.rho, args.a, tol=args.tol, alt_critical=args.paper_aa)
    emit.record({
        "command": "classify",
        "params": _params_echo(args),
        "regime": regime.value,
    })
    return 0


def _cmd_bounds(args, emit: _Emitter) -> int:
    u, v = _resolve_uv(args)
    params = ModelParams(args.rho, args.c1, args.c2, u, v, args.horizon)
    res = ruin_bounds(params)
    emit.record({
        "command": "bounds",
        "params": _params_echo(args, u=u, v=v),
        "lower": res.lower,
        "upper": res.upper,
        "amplification": res.amplification,
    })
    return 0


def _cmd_approx(args, emit: _Emitter) -> int:
    u, v = _resolve_uv(args)
    params = ModelParams(args.rho, args.c1, args.c2, u, v, args.horizon)
    a = params.rescaled().ratio
    regime = classify(args.rho, a, tol=args.tol, alt_critical=args.paper_aa)
    c1_constant = None
    if regime is Regime.FULL_DIM_I:
        est = estimate_pickands_constant(args.rho, a, args.delta, _mc_config(args))
        c1_constant = est.mean
        emit.record({
            "command": "pickands",
            "params": _params_echo(args, a=a, u=None, v=None, c1=None, c2=None),
            "regime": regime.value,
            "estimator": "crude",
            "value": est.mean,
            "std_error": est.std_error,
            "ci95": list(est.ci95),
        })
    approx = approximant(params, regime=regime, c1_constant=c1_constant,
                         tol=args.tol, alt_critical=args.paper_aa)
    emit.record({
        "command": "approx",
        "params": _params_echo(args, u=u, v=v),
        "regime": regime.value,
        "value": approx.value,
        "prefactor": approx.prefactor,
        "u_power": approx.u_power,
    })
    return 0


def _cmd_simulate(args, emit: _Emitter) -> int:
    u, v = _resolve_uv(args)
    params = ModelParams(args.rho, args.c1, args.c2, u, v, args.horizon)
    if (args.tilt_mu1 is None) != (args.tilt_mu2 is None):
        raise ParameterError("--tilt-mu1 and --tilt-mu2 must be given together")
    if args.tilt_mu1 is not None:
        cfg = _mc_config(args, tilt=(args.tilt_mu1, args.tilt_mu2))
        est = mc_ruin_importance(params, cfg)
        estimator = "importance"
    else:
        cfg = _mc_config(args)
        est = mc_ruin(params, cfg)
        estimator = "crude"
    emit.record({
        "command": "simulate",
        "params": _params_echo(args, u=u, v=v),
        "estimator": estimator,
        "value": est.mean,
        "std_error": est.std_error,
        "ci95": list(est.ci95),
    })
    return 0


def _cmd_pickands(args, emit: _Emitter) -> int:
    est = estimate_pickands_constant(args.rho, args.a, args.delta, _mc_config(args))
    emit.record({
        "command": "pickands",
        "params": _params_echo(args),
        "estimator": "crude",
        "value": est.mean,
        "std_error": est.std_error,
        "ci95": list(est.ci95),
    })
    return 0


def _sweep_values(text: str) -> list[float]:
    try:
        values = [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError as exc:
        raise ParameterError(f"--values: {exc}")
    if len(values) < 1:
        raise ParameterError("--values: need at least one value")
    diffs = [b - a for a, b in zip(values, values[1:])]
    if diffs and not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
        raise ParameterError("--values must be strictly monotone")
    return values


def _cmd_sweep(args, emit: _Emitter) -> int:
    values = _sweep_values(args.values)
    pick_cache: dict[tuple, float] = {}
    rows = []
    for val in values:
        rho = args.rho
        a = args.a
        u = args.u
        if args.axis == "rho":
            rho = val
        elif args.axis == "a":
            if args.v is not None:
                raise ParameterError("an a-sweep cannot also fix --v")
            a = val
        else:
            u = val
        if rho is None:
            raise ParameterError("--rho is required (or sweep it)")
        if u is None:
            raise ParameterError("--u is required (or sweep it)")
        if a is None:
            if args.v is None:
                raise ParameterError("one of --a or --v is required")
            a = args.v / u
        params = ModelParams.from_ratio(rho, args.c1, args.c2, u, a, args.horizon)
        regime = classify(rho, a, tol=args.tol, alt_critical=args.paper_aa)

        if rho == 0.0:
            exact = independent_ruin(args.c1, args.c2, params.u, params.v)
            lower, upper = exact, exact
        elif 0.0 < rho < 1.0:
            b = ruin_bounds(params)
            lower, upper = b.lower, b.upper
        else:
            lower, upper = None, None

        c1_constant = None
        if regime is Regime.FULL_DIM_I:
            key = (rho, a, args.delta, args.n, args.grid, args.seed)
            if key not in pick_cache:
                pick_cache[key] = estimate_pickands_constant(
                    rho, a, args.delta, _mc_config(args)
                ).mean
            c1_constant = pick_cache[key]
        approx = approximant(params, regime=regime, c1_constant=c1_constant,
                             tol=args.tol, alt_critical=args.paper_aa)

        cfg = _mc_config(args)
        try:
            derive_tilt(params)
            est = mc_ruin_importance(params, cfg)
        except ParameterError:
            est = mc_ruin(params, cfg)
        ratio = est.mean / approx.value if approx.value > 0.0 else None
        rows.append({
            "axis_value": val,
            "regime": regime.value,
            "exact_or_bound_lower": lower,
            "bound_upper": upper,
            "asymptotic_value": approx.value,
            "mc_mean": est.mean,
            "mc_se": est.std_error,
            "ratio_mc_over_asymptotic": ratio,
        })
    emit.raw_table(_SWEEP_COLUMNS, rows)
    return 0


def _cmd_verify(args, emit: _Emitter) -> int:
    results = verify_mod.run_checks(
        level=args.level, seed=args.seed, mc_scale=args.mc_scale
    )
    emit.raw_text(verify_mod.format_report(results, level=args.level,
                                           seed=args.seed, mc_scale=args.mc_scale))
    return 0 if all(r.passed for r in results) else 4


_DISPATCH = {
    "classify": _cmd_classify,
    "bounds": _cmd_bounds,
    "approx": _cmd_approx,
    "simulate": _cmd_simulate,
    "pickands": _cmd_pickands,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage errors; pass both through.
        return int(exc.code or 0)
    t0 = time.perf_counter()
    emit = _Emitter(getattr(args, "format", "json"), getattr(args, "out", None))
    try:
        code = _DISPATCH[args.command](args, emit)
    except ParameterError as exc:
        print(f"ruin2d {args.command}: validation error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, ZeroDivisionError) as exc:
        print(f"ruin2d {args.command}: numeric failure: {exc}", file=sys.stderr)
        return 3
    emit.flush()
    wall_ms = (time.perf_counter() - t0) * 1e3
    print(f"# wall_time_ms={wall_ms:.1f}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
