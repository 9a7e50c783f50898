"""Command-line front end.

Subcommands: ``budget``, ``modes``, ``scan-pump``, ``scan-lo``,
``simulate-trace``, ``analyze-trace``.  Every command is deterministic for a
given (config, seed), writes data files atomically, and exits nonzero on any
error.  Errors print a single message unless ``--verbose`` asks for the
traceback.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .cavity import (
    cavity_bandwidth_fwhm_mhz,
    escape_efficiency,
    finesse,
    free_spectral_range_mhz,
    gdd_residual_fs2,
    total_efficiency,
)
from .errors import FitError, SpopoError
from .homodyne import (
    extract_extrema,
    moving_variance,
    read_trace,
    shot_noise_trace,
    streaming_variance,
    synthesize_trace,
    trace_to_csv,
    vacuum_seed_for,
    write_trace,
)
from .output import provenance_comment, write_csv, write_json, write_plot_stub
from .squeezing import (
    db,
    db_inv,
    infer_output_variance,
    parametric_gain,
    per_mode_variances,
    project_lo,
    scan_lo_width,
    scan_pump,
)
from .states import VarianceCurve, fit_squeezed_thermal, nonclassical_depth, purity, st_variance, wigner
from .supermodes import mode_fwhm


def _load_config(args) -> cfgmod.ExperimentConfig:
    cfg = cfgmod.parse_config(args.config) if args.config else cfgmod.default_config()
    if args.seed is not None:
        cfg = cfgmod.with_seed(cfg, args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir if args.out_dir is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2))
    else:
        for key, value in payload.items():
            print(f"{key}: {value}")


def cmd_budget(args) -> int:
    cfg = _load_config(args)
    pump = cfgmod.make_pump(cfg)
    table = {
        "fsr_mhz": free_spectral_range_mhz(cfg.cavity),
        "finesse": finesse(cfg.cavity),
        "bandwidth_fwhm_mhz": cavity_bandwidth_fwhm_mhz(cfg.cavity),
        "escape_efficiency": escape_efficiency(cfg.cavity),
        "gdd_residual_fs2": gdd_residual_fs2(cfg.cavity),
        "eta_hom": total_efficiency(cfg.detection),
        "pump_normalized": pump.normalized,
        "parametric_gain": parametric_gain(pump),
    }
    _emit(args, table)
    if args.out_dir is not None:
        write_json(_out_dir(args) / "budget.json", table, cfgmod.__version__,
                   cfgmod.config_sha256(cfg))
    return 0


def cmd_modes(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    sha = cfgmod.config_sha256(cfg)
    prov = provenance_comment(cfgmod.__version__, sha)

    basis = cfgmod.make_basis(cfg)
    n_modes = min(args.n_modes, basis.cutoff + 1)
    pump = cfgmod.make_pump(cfg)
    pairs = per_mode_variances(basis, pump, cfg.cavity, cfg.model.analysis_freq_mhz)

    rows = []
    for k in range(n_modes):
        width = mode_fwhm(basis, k) if k == 0 else None
        rows.append((k, float(basis.gains[k]), width))
    write_csv(out / "modes.csv", ("k", "gain", "fwhm_nm"), rows, prov)

    widths = cfg.lo.projection_widths_nm
    columns = ["k"] + [f"weight_{w:g}nm" for w in widths]
    projections = [
        project_lo(cfgmod.make_lo(cfg, basis.grid, w), basis, n_modes=n_modes) for w in widths
    ]
    proj_rows = [
        [k] + [float(p.weights[k]) for p in projections] for k in range(n_modes)
    ]
    proj_rows.append(["sum"] + [float(p.weights.sum()) for p in projections])
    write_csv(out / "projections.csv", columns, proj_rows, prov)

    var_rows = [
        (k, db(pairs[k].squeezed), db(pairs[k].antisqueezed)) for k in range(n_modes)
    ]
    write_csv(out / "per_mode_variance.csv", ("k", "squeezed_db", "antisqueezed_db"), var_rows, prov)

    if args.plot_stub:
        write_plot_stub(out / "modes.plotspec.txt", [
            {"file": "modes.csv", "x": "k", "y": "gain", "notes": "log y recommended"},
            {"file": "projections.csv", "x": "k", "y": ", ".join(columns[1:])},
            {"file": "per_mode_variance.csv", "x": "k", "y": "squeezed_db, antisqueezed_db"},
        ])
    _emit(args, {"written": f"{out}/modes.csv, projections.csv, per_mode_variance.csv",
                 "n_modes": n_modes, "cutoff": basis.cutoff})
    return 0


def _scan_summary(cfg, curve, basis, extra: dict) -> dict:
    pairs = per_mode_variances(
        basis, cfgmod.make_pump(cfg), cfg.cavity, cfg.model.analysis_freq_mhz
    )
    per_mode = [
        {
            "k": k,
            "gain": float(basis.gains[k]),
            "squeezed_db": db(pairs[k].squeezed),
            "antisqueezed_db": db(pairs[k].antisqueezed),
        }
        for k in range(min(40, len(pairs)))
    ]
    return {
        "x_label": curve.x_label,
        "n_points": int(curve.x.size),
        "x_min": float(curve.x.min()),
        "x_max": float(curve.x.max()),
        "eta_hom": total_efficiency(cfg.detection),
        "eta_esc": escape_efficiency(cfg.cavity),
        "analysis_freq_mhz": cfg.model.analysis_freq_mhz,
        "pump_normalized": cfgmod.make_pump(cfg).normalized,
        "per_mode": per_mode,
        **extra,
    }


def cmd_scan_pump(args) -> int:
    if not 0.0 <= args.p_min < args.p_max < 1.0:
        raise ValueError("pump range must satisfy 0 <= p_min < p_max < 1")
    cfg = _load_config(args)
    out = _out_dir(args)
    sha = cfgmod.config_sha256(cfg)

    basis = cfgmod.make_basis(cfg)
    lo = cfgmod.make_lo(cfg, basis.grid)
    p_values = np.linspace(args.p_min, args.p_max, args.n)
    curve = scan_pump(p_values, lo, basis, cfg.cavity, cfg.detection, cfg.model.analysis_freq_mhz)
    write_csv(
        out / "scan_pump.csv",
        ("x", "squeezing_db", "antisqueezing_db"),
        zip(curve.x, curve.squeezing_db, curve.antisqueezing_db),
        provenance_comment(cfgmod.__version__, sha),
    )

    eta_hom = total_efficiency(cfg.detection)
    anchor_curve = scan_pump([0.3], lo, basis, cfg.cavity, cfg.detection, cfg.model.analysis_freq_mhz)
    anchor_sq_db = float(anchor_curve.squeezing_db[0])
    anchor = {
        "pump_normalized": 0.3,
        "detected_squeezing_db": anchor_sq_db,
        "detected_antisqueezing_db": float(anchor_curve.antisqueezing_db[0]),
        "inferred_output_squeezing_db": db(
            infer_output_variance(db_inv(anchor_sq_db), eta_hom)
        ),
    }
    summary = _scan_summary(cfg, curve, basis, {"anchor": anchor})
    write_json(out / "scan_pump_summary.json", summary, cfgmod.__version__, sha)
    if args.plot_stub:
        write_plot_stub(out / "scan_pump.plotspec.txt", [
            {"file": "scan_pump.csv", "x": "x (pump power / threshold)",
             "y": "squeezing_db, antisqueezing_db"},
        ])
    _emit(args, {"written": f"{out}/scan_pump.csv, scan_pump_summary.json", **anchor})
    return 0


def cmd_scan_lo(args) -> int:
    if not 0.0 < args.w_min < args.w_max:
        raise ValueError("width range must satisfy 0 < w_min < w_max")
    cfg = _load_config(args)
    out = _out_dir(args)
    sha = cfgmod.config_sha256(cfg)

    basis = cfgmod.make_basis(cfg)
    widths = np.linspace(args.w_min, args.w_max, args.n)
    curve = scan_lo_width(
        widths, cfgmod.make_pump(cfg), basis, cfg.cavity, cfg.detection, cfg.model.analysis_freq_mhz
    )
    write_csv(
        out / "scan_lo.csv",
        ("x", "squeezing_db", "antisqueezing_db"),
        zip(curve.x, curve.squeezing_db, curve.antisqueezing_db),
        provenance_comment(cfgmod.__version__, sha),
    )
    summary = _scan_summary(cfg, curve, basis, {
        "narrowest_squeezing_db": float(curve.squeezing_db[0]),
        "widest_squeezing_db": float(curve.squeezing_db[-1]),
    })
    write_json(out / "scan_lo_summary.json", summary, cfgmod.__version__, sha)
    if args.plot_stub:
        write_plot_stub(out / "scan_lo.plotspec.txt", [
            {"file": "scan_lo.csv", "x": "x (LO intensity FWHM, nm)",
             "y": "squeezing_db, antisqueezing_db"},
        ])
    _emit(args, {"written": f"{out}/scan_lo.csv, scan_lo_summary.json"})
    return 0


def cmd_simulate_trace(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)

    model = cfgmod.detected_trace_model(cfg)
    scan = cfgmod.make_phase_scan(cfg)
    trace = synthesize_trace(model, scan, cfg.acquisition)

    vac_seed = vacuum_seed_for(cfg.acquisition.rng_seed)
    vac_spec = replace(cfg.acquisition, rng_seed=vac_seed)
    vacuum = shot_noise_trace(vac_spec)
    trace = replace(trace, shot_calibration=vacuum.shot_calibration)

    trace_path = out / args.out_name
    vacuum_path = out / args.vacuum_name
    write_trace(trace, trace_path)
    write_trace(vacuum, vacuum_path)
    if args.csv:
        trace_to_csv(trace, trace_path.with_suffix(".csv"))

    _emit(args, {
        "trace": str(trace_path),
        "vacuum": str(vacuum_path),
        "seed": cfg.acquisition.rng_seed,
        "vacuum_seed": vac_seed,
        "n_samples": cfg.acquisition.n_samples,
        "sample_rate_sa_s": cfg.acquisition.sample_rate,
    })
    return 0


def cmd_analyze_trace(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    sha = cfgmod.config_sha256(cfg)
    prov = provenance_comment(cfgmod.__version__, sha)

    trace = read_trace(args.trace)
    vacuum = read_trace(args.vacuum)
    shot = streaming_variance(vacuum.samples)
    trace = replace(trace, shot_calibration=shot)

    detected = moving_variance(trace)
    extrema = extract_extrema(detected)
    eta_hom = total_efficiency(cfg.detection)
    output_curve = VarianceCurve(
        thetas=detected.thetas,
        variances=infer_output_variance(detected.variances, eta_hom),
    )

    report = {
        "squeezing_db": extrema.squeezing_db,
        "antisqueezing_db": extrema.antisqueezing_db,
        "theta_min_rad": extrema.theta_min,
        "eta_hom": eta_hom,
        "shot_calibration": shot,
        "n_windows": int(detected.thetas.size),
    }

    curve_rows = zip(detected.thetas, detected.variances, output_curve.variances)
    write_csv(out / "variance_curve.csv",
              ("theta_rad", "variance_detected", "variance_output"), curve_rows, prov)

    try:
        fit = fit_squeezed_thermal(output_curve, fit_alpha=args.fit_alpha)
    except FitError as exc:
        report["error"] = str(exc)
        write_json(out / "report.json", report, cfgmod.__version__, sha)
        _emit(args, report)
        return 0

    state = fit.state
    report.update({
        "n_th": state.n_th,
        "r": state.r,
        "alpha": fit.scan.alpha,
        "theta0_rad": fit.scan.theta0,
        "purity": purity(state),
        "nonclassical_depth": nonclassical_depth(state),
        "fit_residual": fit.residual,
        "fit_degenerate": fit.degenerate,
        "output_squeezing_db_fit": db(st_variance(state, 0.0)),
    })
    write_json(out / "report.json", report, cfgmod.__version__, sha)

    # Wigner density of the fitted state on a +-4.5 sigma grid
    smax = math.sqrt(st_variance(state, math.pi / 2.0))
    smin = math.sqrt(st_variance(state, 0.0))
    xs = np.linspace(-4.5 * smin, 4.5 * smin, args.wigner_points)
    ps = np.linspace(-4.5 * smax, 4.5 * smax, args.wigner_points)
    w = wigner(state, xs[None, :], ps[:, None])
    header = json.dumps({
        "rows": "p", "cols": "x",
        "x": [float(v) for v in xs], "p": [float(v) for v in ps],
        "n_th": state.n_th, "r": state.r,
    })
    rows = [[f"{v:.9e}" for v in row] for row in w]
    write_csv(out / "wigner.csv", [f"x{i}" for i in range(xs.size)], rows, f"# {header}")

    _emit(args, report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, help="override the acquisition RNG seed")
    common.add_argument("--out-dir", default=None,
                        help="directory for output files (default: current directory)")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="stdout summary format")
    common.add_argument("--verbose", action="store_true", help="full tracebacks on errors")

    parser = argparse.ArgumentParser(
        prog="spopo",
        description="Pulsed-OPO squeezing toolkit: mode structure, scans, and trace analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("budget", parents=[common],
                       help="derived cavity and detection-efficiency numbers")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("modes", parents=[common],
                       help="per-mode gains, widths, projections, and variances")
    p.add_argument("--n-modes", type=int, default=40)
    p.add_argument("--plot-stub", action="store_true")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("scan-pump", parents=[common],
                       help="detected squeezing versus pump power")
    p.add_argument("--p-min", type=float, default=0.0)
    p.add_argument("--p-max", type=float, default=0.5)
    p.add_argument("--n", type=int, default=11)
    p.add_argument("--plot-stub", action="store_true")
    p.set_defaults(func=cmd_scan_pump)

    p = sub.add_parser("scan-lo", parents=[common],
                       help="detected squeezing versus LO spectral width")
    p.add_argument("--w-min", type=float, default=0.2)
    p.add_argument("--w-max", type=float, default=3.0)
    p.add_argument("--n", type=int, default=15)
    p.add_argument("--plot-stub", action="store_true")
    p.set_defaults(func=cmd_scan_lo)

    p = sub.add_parser("simulate-trace", parents=[common],
                       help="synthesize a signal trace plus vacuum calibration trace")
    p.add_argument("--out-name", default="trace.spopotrc")
    p.add_argument("--vacuum-name", default="vacuum.spopotrc")
    p.add_argument("--csv", action="store_true", help="also export the signal trace as CSV")
    p.set_defaults(func=cmd_simulate_trace)

    p = sub.add_parser("analyze-trace", parents=[common],
                       help="variance curve, extrema, state fit, and Wigner grid from traces")
    p.add_argument("trace", help="signal trace file")
    p.add_argument("vacuum", help="vacuum calibration trace file")
    p.add_argument("--fit-alpha", action=argparse.BooleanOptionalAction, default=True,
                   help="fit the quadratic phase-scan distortion")
    p.add_argument("--wigner-points", type=int, default=101)
    p.set_defaults(func=cmd_analyze_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpopoError, ValueError, OSError) as exc:
        if getattr(args, "verbose", False):
            raise
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
