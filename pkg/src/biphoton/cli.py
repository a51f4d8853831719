"""
Command-line front end.

    biphoton run <config>     spectrum, G2 before/after fiber, summary, plot script
    biphoton scan <config>    the sweep named in the config's [scan] table
    biphoton figures          list the bundled figure configs

``<config>`` is a TOML path or a bundled figure id such as ``fig4``.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np
from scipy.constants import c

from . import __version__
from .config import ScenarioConfig, bundled_figures, load_config, parse_config
from .crystal import default_grid, make_crystal, signal_window, tpsa
from .dispersion import MATERIALS_ENV_VAR, fiber_curvature, harris_curvature, load_materials
from .errors import BiphotonError, ConfigError
from .propagation import (
    FiberSpec,
    apply_filters,
    apply_medium,
    g2,
    mean_wavelength,
    spectral_width,
    ttpa,
)
from .scan import (
    FiberSweep,
    default_fiber_range,
    heuristic_fiber_length,
    optimize_fiber,
    refine_optimal_fiber_length,
    scan_chirp,
    scan_crystal_length,
    scan_fiber_length,
)

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# rows kept in spectrum.csv / g2 csv: samples above this fraction of the peak
_SPECTRUM_FLOOR = 1e-6
_G2_FLOOR = 1e-5
_MAX_ROWS = 8192

log = logging.getLogger("biphoton")


def _write_csv(path: Path, header: list[str], columns) -> None:
    data = np.column_stack([np.asarray(col, dtype=float) for col in columns])
    if not np.all(np.isfinite(data)):
        raise BiphotonError(f"refusing to write non-finite values to {path.name}")
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt="%.10g")


def _json_scalar(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, indent=2, allow_nan=False, default=_json_scalar)
    path.write_text(text + "\n", encoding="utf-8")


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def _thin(idx: np.ndarray) -> np.ndarray:
    stride = max(1, math.ceil(idx.size / _MAX_ROWS))
    return idx[::stride]


def _band(values: np.ndarray, floor: float, pad: float = 0.25) -> np.ndarray:
    """Contiguous index range where ``values`` exceed ``floor`` of the peak, padded."""
    above = np.flatnonzero(values >= floor * values.max())
    lo, hi = above[0], above[-1]
    extra = int(pad * (hi - lo + 1))
    return np.arange(max(0, lo - extra), min(values.size, hi + extra + 1))


def _scenario_setup(cfg: ScenarioConfig, materials_path):
    materials = load_materials(materials_path, fiber=cfg.fiber.material)
    cc = cfg.crystal
    crystal = make_crystal(materials, cc.length, cc.alpha, cc.pump_nm * 1e-9, cc.degenerate_nm * 1e-9)
    grid = default_grid(crystal, materials, cfg.grid.n_points, on_edge="warn")
    return materials, crystal, grid


def _spectrum_rows(filtered, crystal, materials, fiber: FiberSpec):
    s = filtered.spectrum / filtered.spectrum.max()
    idx = _band(s, _SPECTRUM_FLOOR, pad=0.0)
    omega = filtered.omega
    # the curvature stencil reaches 2 h = 2e-4 omega on either side
    lo, hi = signal_window(crystal, materials)
    inside = (omega[idx] * (1 - 2.5e-4) > lo) & (omega[idx] * (1 + 2.5e-4) < hi)
    idx = _thin(idx[inside])[::-1]  # descending omega = ascending wavelength
    w = omega[idx]
    hp = harris_curvature(crystal, materials, w)
    ofp = fiber_curvature(fiber, w, crystal.pump_frequency)
    return 2 * np.pi * c / w * 1e9, s[idx], hp, ofp


def _g2_rows(profile):
    idx = _thin(_band(profile.g2_values, _G2_FLOOR))
    return profile.tau_samples[idx] * 1e12, profile.g2_values[idx]


def _plot_script_run(files: list[str], title: str) -> str:
    lines = ["# gnuplot script; run: gnuplot plot.gp", "set datafile separator ','",
             "set terminal pngcairo size 900,600", "set key autotitle columnhead"]
    if "spectrum.csv" in files:
        lines += ["set output 'spectrum.png'", f"set title '{title}'",
                  "set xlabel 'signal wavelength (nm)'", "set ylabel 'normalized |F|^2'",
                  "plot 'spectrum.csv' using 1:2 with lines", "",
                  "set output 'curvature.png'", "set ylabel 'curvature (s^2)'",
                  "plot 'spectrum.csv' using 1:3 with lines, '' using 1:4 with lines", ""]
    for name in ("g2_before", "g2_after"):
        if f"{name}.csv" in files:
            lines += [f"set output '{name}.png'", f"set title '{title}'",
                      "set xlabel 'tau (ps)'", "set ylabel 'normalized G2'",
                      f"plot '{name}.csv' using 1:2 with lines", ""]
    if "fiber_scan.csv" in files:
        lines += ["set output 'fiber_scan.png'", "set xlabel 'signal-arm fiber length (m)'",
                  "set ylabel 'correlation time (ps)'",
                  "plot 'fiber_scan.csv' using 1:2 with linespoints", ""]
    return "\n".join(lines) + "\n"


def _plot_script_scan(header: list[str], title: str) -> str:
    lines = ["# gnuplot script; run: gnuplot plot.gp", "set datafile separator ','",
             "set terminal pngcairo size 900,600", "set key autotitle columnhead",
             f"set title '{title}'", f"set xlabel '{header[0]}'"]
    for j, name in enumerate(header[1:], start=2):
        lines += [f"set output 'scan_{name}.png'", f"set ylabel '{name}'",
                  f"plot 'scan.csv' using 1:{j} with linespoints"]
    return "\n".join(lines) + "\n"


def _base_summary(kind: str, cfg: ScenarioConfig, crystal, grid) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": kind,
        "figure_id": cfg.figure.id,
        "crystal_length_cm": cfg.crystal.length_cm,
        "alpha_cm2": cfg.crystal.alpha_cm2,
        "pump_nm": cfg.crystal.pump_nm,
        "degenerate_nm": cfg.crystal.degenerate_nm,
        "K0_per_cm": crystal.grating_K0 * 1e-2,
        "signal_filter": cfg.signal_filter.kind,
        "idler_filter": cfg.idler_filter.kind,
        "grid_points": grid.n_points,
        "grid_span_rad_per_s": grid.span,
    }


def run_scenario(cfg: ScenarioConfig, out_dir: Path, materials_path=None) -> dict:
    """Run one scenario and write its artifacts; returns the summary dict."""
    materials, crystal, grid = _scenario_setup(cfg, materials_path)
    filters = cfg.filters()
    base = tpsa(crystal, materials, grid)
    filtered = apply_filters(base, *filters)
    out_dir.mkdir(parents=True, exist_ok=True)

    files = []
    extra = {}
    if cfg.fiber.optimize:
        l_range = cfg.fiber.range_m or default_fiber_range(crystal, materials)
        scan, opt, _ = optimize_fiber(crystal, materials, filters, grid, l_range, cfg.fiber.n_steps)
        _write_csv(out_dir / "fiber_scan.csv", ["fiber_length_m", "correlation_time_ps"],
                   [scan.parameter_values, scan.metric_values * 1e12])
        files.append("fiber_scan.csv")
        length_signal = opt.length
        extra = {
            "fiber_scan_file": "fiber_scan.csv",
            "fiber_optimum_m": opt.length,
            "fiber_optimum_at_boundary": opt.at_boundary,
            "fiber_optimum_correlation_time_ps": opt.correlation_time * 1e12,
        }
    else:
        length_signal = cfg.fiber.length_signal_m
    fiber = FiberSpec(materials.fiber, length_signal, cfg.fiber.length_idler_m)

    before = g2(ttpa(filtered))
    after = g2(ttpa(apply_medium(filtered, fiber)))

    arts = cfg.outputs.artifacts
    if "spectrum" in arts:
        _write_csv(out_dir / "spectrum.csv", ["wavelength_nm", "spectrum", "hp_s2", "ofp_s2"],
                   _spectrum_rows(filtered, crystal, materials, fiber))
        files.append("spectrum.csv")
    for name, prof in (("g2_before", before), ("g2_after", after)):
        if name in arts:
            _write_csv(out_dir / f"{name}.csv", ["tau_ps", "g2"], _g2_rows(prof))
            files.append(f"{name}.csv")

    summary = _base_summary("run", cfg, crystal, grid)
    summary.update({
        "grid_edge_ratio": base.edge_ratio(),
        "spectral_fwhm_nm": spectral_width(filtered) * 1e9,
        "mean_wavelength_nm": mean_wavelength(filtered) * 1e9,
        "fwhm_before_ps": before.fwhm * 1e12,
        "fwhm_after_ps": after.fwhm * 1e12,
        "fourier_limit_ps": before.fourier_limit_fwhm * 1e12,
        "compression_ratio": before.fwhm / after.fwhm,
        "fiber_material": materials.fiber.name,
        "fiber_length_signal_m": length_signal,
        "fiber_length_idler_m": cfg.fiber.length_idler_m,
        "fiber_heuristic_m": _finite_or_none(heuristic_fiber_length(crystal, materials)),
    })
    summary.update(extra)
    if "plot" in arts:
        (out_dir / "plot.gp").write_text(_plot_script_run(files, cfg.figure.id or "scenario"),
                                         encoding="utf-8")
        files.append("plot.gp")
    summary["files"] = files + ["summary.json"]
    _write_json(out_dir / "summary.json", summary)
    return summary


def run_scan(cfg: ScenarioConfig, out_dir: Path, materials_path=None) -> dict:
    """Run the config's [scan] sweep; writes scan.csv, summary.json and plot.gp."""
    sc = cfg.scan
    if sc is None:
        raise ConfigError("config has no [scan] table")
    materials, crystal, grid = _scenario_setup(cfg, materials_path)
    filters = cfg.filters()
    cc = cfg.crystal
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = _base_summary("scan", cfg, crystal, grid)
    summary["scan_kind"] = sc.kind
    summary["scan_n_steps"] = sc.n_steps

    if sc.kind == "fiber_length":
        sweep = FiberSweep(crystal, materials, filters, grid)
        result = scan_fiber_length(crystal, materials, filters, (sc.start, sc.stop), sc.n_steps,
                                   sweep=sweep)
        opt = refine_optimal_fiber_length(result, crystal, materials, sweep=sweep)
        header = ["fiber_length_m", "correlation_time_ps"]
        columns = [result.parameter_values, result.metric_values * 1e12]
        summary.update({
            "argmin_m": result.argmin_value,
            "min_correlation_time_ps": result.min_metric * 1e12,
            "refined_optimum_m": opt.length,
            "refined_correlation_time_ps": opt.correlation_time * 1e12,
            "optimum_at_boundary": opt.at_boundary,
            "heuristic_length_m": _finite_or_none(opt.heuristic_length),
            "heuristic_consistent": opt.heuristic_consistent,
            "fourier_limit_ps": sweep.fourier_limit() * 1e12,
        })
    elif sc.kind == "crystal_length":
        result = scan_crystal_length(cc.alpha, (sc.start * 1e-2, sc.stop * 1e-2), sc.n_steps,
                                     materials, filters, cc.pump_nm * 1e-9, cc.degenerate_nm * 1e-9,
                                     cfg.grid.n_points)
        ex = result.extra
        header = ["crystal_length_cm", "compressed_negative_chirp_fs", "compressed_positive_chirp_fs",
                  "uncompressed_negative_chirp_ps", "fiber_length_m"]
        columns = [result.parameter_values * 1e2, result.metric_values * 1e15,
                   ex["correlation_time_positive_chirp_s"] * 1e15,
                   ex["uncompressed_correlation_time_s"] * 1e12, ex["fiber_length_m"]]
        summary.update({
            "argmin_cm": result.argmin_value * 1e2,
            "min_correlation_time_fs": result.min_metric * 1e15,
            "max_correlation_time_fs": float(result.metric_values.max()) * 1e15,
        })
    else:
        result = scan_chirp(cc.length, (sc.start * 1e4, sc.stop * 1e4), sc.n_steps, materials,
                            filters, cc.pump_nm * 1e-9, cc.degenerate_nm * 1e-9, cfg.grid.n_points,
                            with_compression=sc.with_compression)
        header = ["alpha_abs_cm2", "spectral_fwhm_nm"]
        columns = [result.parameter_values * 1e-4, result.metric_values * 1e9]
        summary.update({
            "spectral_fwhm_start_nm": float(result.metric_values[0]) * 1e9,
            "spectral_fwhm_stop_nm": float(result.metric_values[-1]) * 1e9,
        })
        if sc.with_compression:
            ex = result.extra
            header += ["compressed_fs", "fourier_limit_fs", "fiber_length_m"]
            columns += [ex["correlation_time_s"] * 1e15, ex["fourier_limit_s"] * 1e15,
                        ex["fiber_length_m"]]
            summary.update({
                "fiber_length_start_m": float(ex["fiber_length_m"][0]),
                "fiber_length_stop_m": float(ex["fiber_length_m"][-1]),
            })

    _write_csv(out_dir / "scan.csv", header, columns)
    files = ["scan.csv"]
    if "plot" in cfg.outputs.artifacts:
        (out_dir / "plot.gp").write_text(_plot_script_scan(header, cfg.figure.id or sc.kind),
                                         encoding="utf-8")
        files.append("plot.gp")
    summary["files"] = files + ["summary.json"]
    _write_json(out_dir / "summary.json", summary)
    return summary


def list_figures() -> str:
    lines = []
    for name, path in bundled_figures().items():
        cfg = parse_config(path.read_text(encoding="utf-8"), str(path))
        cc, fb = cfg.crystal, cfg.fiber
        fiber = ("optimize" if fb.optimize else f"{fb.length_signal_m:g} m")
        parts = [f"L = {cc.length_cm:g} cm", f"alpha = {cc.alpha_cm2:g} cm^-2", f"fiber {fiber}"]
        if cfg.signal_filter.kind == "gaussian":
            f = cfg.signal_filter
            parts.append(f"gaussian filter {f.center_nm:g} nm / {f.width_nm:g} nm")
        if cfg.scan is not None:
            s = cfg.scan
            parts.append(f"scan {s.kind} {s.start:g}..{s.stop:g} {s.unit} x{s.n_steps}")
        lines.append(f"{name:6s} {cfg.figure.description}\n       [{'; '.join(parts)}]")
    return "\n".join(lines)


def _origin(exc: BaseException) -> str:
    tb = exc.__traceback__
    module = "biphoton"
    while tb is not None:
        name = tb.tb_frame.f_globals.get("__name__", "")
        if name.startswith("biphoton."):
            module = name
        tb = tb.tb_next
    return module.rsplit(".", 1)[-1]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="biphoton",
        description="Biphoton spectra from chirped QPM crystals and their compression in fiber.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run a scenario"), ("scan", "run the config's parameter sweep")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", help="TOML config path or bundled figure id (e.g. fig4)")
        sp.add_argument("--out", help="output directory (overrides outputs.directory)")
        sp.add_argument("--grid-points", type=int, help="grid size, a power of two")
        sp.add_argument("--materials", help=f"materials file (default: ${MATERIALS_ENV_VAR} or bundled)")
    sub.add_parser("figures", help="list bundled figure configs")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="biphoton: %(levelname)s: %(message)s")
    if args.command == "figures":
        print(list_figures())
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        if args.grid_points is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, n_points=args.grid_points))
        out = Path(args.out if args.out else cfg.outputs.directory)
        runner = run_scenario if args.command == "run" else run_scan
        summary = runner(cfg, out, args.materials)
    except ConfigError as exc:
        print(f"biphoton: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BiphotonError, ArithmeticError, ValueError) as exc:
        print(f"biphoton: error [{_origin(exc)}]: {exc}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"biphoton: error [io]: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"wrote {', '.join(summary['files'])} to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
