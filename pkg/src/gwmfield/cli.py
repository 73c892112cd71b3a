"""Command-line surface: evaluate, simulate, fit, estimate, diagnose, ingest.

Every subcommand is a pure function of its flags, input files, and seed;
outputs are CSV (header row, '.' decimal, no locale) or schema-versioned
JSON, so figures can be regenerated byte-for-byte in any plotting tool.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import diagnostics, fieldsim, inference, winddata
from .core import (
    DEFAULT_QUAD,
    ModelParams,
    QuadConfig,
    cov_large_lag,
    covariance,
    local_props,
    variance,
    variogram_small_lag,
)
from .errors import DataFormatError, ModelParamError, NumericalError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


def _add_model_args(sp, need_lambda=True):
    sp.add_argument("--alpha", type=float, required=True, help="fractional order in (0, 1]")
    sp.add_argument("--gamma", type=float, required=True, help="spectral exponent > 0")
    if need_lambda:
        sp.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="inverse length scale (default 1)")
    sp.add_argument("--dim", type=int, default=1, choices=(1, 2, 3),
                    help="spatial dimension n (default 1)")


def _params(args) -> ModelParams:
    return ModelParams(args.alpha, args.gamma, getattr(args, "lam", 1.0), args.dim)


def _parse_r_values(args) -> np.ndarray:
    if args.r is not None:
        vals = np.array([float(t) for t in args.r.split(",")])
    else:
        lo, hi, num = args.r_range.split(":")
        lo, hi, num = float(lo), float(hi), int(num)
        if args.log_spacing:
            vals = np.geomspace(lo, hi, num)
        else:
            vals = np.linspace(lo, hi, num)
    if np.any(vals < 0):
        raise ModelParamError("lags must be >= 0")
    return vals


def _write_csv(path, header: list[str], columns: list[np.ndarray]):
    rows = len(columns[0])
    out = open(path, "w", newline="\n") if path != "-" else sys.stdout
    try:
        out.write(",".join(header) + "\n")
        for i in range(rows):
            out.write(",".join(f"{col[i]:.17g}" for col in columns) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _write_json(path, payload: dict):
    payload = {"schema_version": SCHEMA_VERSION, **payload}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_eval(args) -> int:
    p = _params(args)
    r = _parse_r_values(args)
    q = QuadConfig(
        rel_tol=args.rel_tol if args.rel_tol else DEFAULT_QUAD.rel_tol,
        abs_tol=args.abs_tol if args.abs_tol else DEFAULT_QUAD.abs_tol,
        max_subdivisions=args.max_subdivisions or DEFAULT_QUAD.max_subdivisions,
        upper_cutoff=args.upper_cutoff or DEFAULT_QUAD.upper_cutoff,
    )
    cov = np.array([covariance(p, float(x), q) for x in r])
    v0 = variance(p)
    vario = 2.0 * (v0 - cov)
    pos = r > 0
    tail = np.full(r.size, np.nan)
    small = np.full(r.size, np.nan)
    tail[pos] = [cov_large_lag(p, float(x), terms=args.tail_terms) for x in r[pos]]
    small[pos] = variogram_small_lag(p, r[pos])
    _write_csv(args.out, ["r", "covariance", "variogram", "tail_asymptote",
                          "small_lag_asymptote"], [r, cov, vario, tail, small])
    return EXIT_OK


def cmd_simulate(args) -> int:
    p = _params(args)
    sizes = tuple(int(t) for t in args.grid.split(","))
    spacing = tuple(float(t) for t in args.spacing.split(","))
    if len(spacing) == 1 and len(sizes) == 2:
        spacing = (spacing[0], spacing[0])
    grid = fieldsim.Grid(sizes, spacing)
    sample = fieldsim.simulate(p, grid, args.seed)
    if args.csv:
        fieldsim.write_field_csv(sample, args.out)
    else:
        fieldsim.write_field_raw(sample, args.out)
    if sample.clipped_mass_fraction > 0:
        sys.stderr.write(
            f"note: embedding clipped mass fraction {sample.clipped_mass_fraction:.3g}\n"
        )
    return EXIT_OK


def cmd_props(args) -> int:
    p = _params(args)
    lp = local_props(p)
    _write_json(args.out, {
        "params": {"alpha": p.alpha, "gamma": p.gamma, "lambda": p.lam, "n": p.n},
        "holder_exponent": lp.holder_exponent,
        "fractal_dim": lp.fractal_dim,
        "lass_order": lp.lass_order,
        "lass_amplitude": lp.lass_amplitude,
        "memory_exponent": lp.memory_exponent,
        "exponential_tail": lp.exponential_tail,
        "differentiable": lp.differentiable,
        "variance": variance(p),
    })
    return EXIT_OK


def _load_velocity(args) -> np.ndarray:
    if args.plain:
        series = winddata.load_plain_series(args.input)
        return series - series.mean()
    daily = winddata.load_wind_file(args.input, station=args.station,
                                    years=_parse_years(args.years))
    velocity, _ = inference.deseasonalize(daily)
    return velocity


def _parse_years(spec: str) -> tuple[int, int]:
    lo, _, hi = spec.partition("-")
    return int(lo), int(hi or lo)


def cmd_fit(args) -> int:
    velocity = _load_velocity(args)
    starts = None
    if args.starts:
        starts = [tuple(float(x) for x in item.split(",")) for item in args.starts.split(";")]
    res = inference.fit(velocity, family=args.family, starts=starts)
    th = res.params
    _write_json(args.out_json, {
        "family": res.family,
        "alpha": th.alpha,
        "gamma": th.gamma,
        "K": th.k_amp,
        "ell": th.ell,
        "s2": th.s2,
        "nll_reduced": res.nll_reduced,
        "iterations": res.iterations,
        "converged": res.converged,
        "n_objective_evals": res.n_evals,
        "n_samples": int(velocity.size),
        "sample_variance": float(np.mean(velocity**2)),
    })
    if args.out_psd:
        welch = inference.welch_psd(velocity)
        model = inference.extended_psd(th, welch.omegas)
        _write_csv(args.out_psd, ["omega", "empirical_welch", "model_psd"],
                   [welch.omegas, welch.psd, model])
    if args.out_variogram:
        h = np.arange(1, args.h_max + 1)
        emp = inference.empirical_variogram(velocity, args.h_max)
        model_v = 2.0 * (th.s2 - inference.extended_cov(th, h))
        plateau = np.full(h.size, float(np.mean(velocity**2)))
        _write_csv(args.out_variogram,
                   ["h", "empirical", "model", "half_plateau_marker"],
                   [h.astype(float), emp, model_v, plateau])
    return EXIT_OK


def cmd_psd(args) -> int:
    velocity = _load_velocity(args)
    omegas, pgram = inference.periodogram(velocity)
    welch = inference.welch_psd(velocity)
    wl = np.interp(omegas, welch.omegas, welch.psd)
    _write_csv(args.out, ["omega", "periodogram", "welch_interp"], [omegas, pgram, wl])
    return EXIT_OK


def cmd_variogram(args) -> int:
    velocity = _load_velocity(args)
    h = np.arange(1, args.h_max + 1)
    emp = inference.empirical_variogram(velocity, args.h_max)
    marker = np.full(h.size, float(np.mean(velocity**2)))
    _write_csv(args.out, ["h", "empirical_variogram", "half_plateau_marker"],
               [h.astype(float), emp, marker])
    return EXIT_OK


def cmd_diagnose(args) -> int:
    p = _params(args)
    grid = fieldsim.Grid((args.grid_size,), (args.spacing,))
    report = diagnostics.diagnostics_report(
        p, grid, seeds=range(args.seed, args.seed + args.replicates))
    payload = report.to_dict()
    payload["theoretical_fractal_dim"] = local_props(p).fractal_dim
    _write_json(args.out, payload)
    return EXIT_OK


def cmd_ingest(args) -> int:
    daily = winddata.load_wind_file(args.input, station=args.station,
                                    years=_parse_years(args.years))
    _write_json(args.out, {
        "file": args.input,
        "sha256": winddata.file_checksum(args.input),
        "station": str(args.station),
        "years": args.years,
        "rows": len(daily),
        "speed_min": float(daily.values.min()),
        "speed_max": float(daily.values.max()),
    })
    return EXIT_OK


# --------------------------------------------------------------------------
# parser wiring
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gwm",
        description="Generalized Whittle-Matern fields: evaluate, simulate, fit, diagnose.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="covariance/variogram table with asymptotic overlays")
    _add_model_args(sp)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--r", help="comma-separated lags")
    group.add_argument("--r-range", help="lo:hi:num lag grid")
    sp.add_argument("--log-spacing", action="store_true", help="geometric lag grid")
    sp.add_argument("--tail-terms", type=int, default=1)
    sp.add_argument("--rel-tol", type=float, help="quadrature relative tolerance")
    sp.add_argument("--abs-tol", type=float, help="quadrature absolute tolerance")
    sp.add_argument("--max-subdivisions", type=int)
    sp.add_argument("--upper-cutoff", type=float)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("simulate", help="seeded sample path / field")
    _add_model_args(sp)
    sp.add_argument("--grid", required=True, help="N or N1,N2")
    sp.add_argument("--spacing", default="1.0", help="d or d1,d2")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv", action="store_true", help="CSV instead of raw + sidecar")
    sp.add_argument("--out", required=True, help="output path (prefix for raw)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("props", help="sample-path properties as JSON")
    _add_model_args(sp)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_props)

    for name, fn in (("fit", cmd_fit), ("psd", cmd_psd), ("variogram", cmd_variogram)):
        sp = sub.add_parser(name, help=f"{name} on a wind file or plain series")
        sp.add_argument("--input", required=True)
        sp.add_argument("--plain", action="store_true",
                        help="input is one value per line, already deseasonalized")
        sp.add_argument("--station", default="RPT")
        sp.add_argument("--years", default="1973-1978")
        if name == "fit":
            sp.add_argument("--family", choices=("wm", "gwm"), default="gwm")
            sp.add_argument("--starts", help="semicolon-separated starts, e.g. '0.7,1.5,1;1,1,0.75'")
            sp.add_argument("--out-json", default="-")
            sp.add_argument("--out-psd")
            sp.add_argument("--out-variogram")
            sp.add_argument("--h-max", type=int, default=50)
        else:
            sp.add_argument("--out", default="-")
            if name == "variogram":
                sp.add_argument("--h-max", type=int, default=100)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("diagnose", help="replicate study of path estimators")
    _add_model_args(sp)
    sp.add_argument("--grid-size", type=int, default=4096)
    sp.add_argument("--spacing", type=float, default=0.01)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replicates", type=int, default=20)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("ingest", help="validate a wind file and report its checksum")
    sp.add_argument("--input", required=True)
    sp.add_argument("--station", default="RPT")
    sp.add_argument("--years", default="1973-1978")
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_ingest)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except (ModelParamError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
