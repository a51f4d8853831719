"""
Parameter sweeps: fiber length, crystal length and chirp.

Correlation time is the FWHM of G2(tau); fiber sits in the signal arm only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .crystal import CrystalSpec, default_grid, make_crystal, tpsa
from .dispersion import MaterialSet, group_velocity_dispersion, harris_curvature
from .errors import ConfigError
from .propagation import (
    FLAT,
    FiberSpec,
    FilterSpec,
    _centered_transform,
    _normalized_intensity,
    apply_filters,
    detrended_medium_phase,
    fwhm,
    g2,
    spectral_width,
    tau_axis,
    ttpa,
)

FIBER_RESOLUTION = 0.01  # m
CRYSTAL_RESOLUTION = 5e-4  # m
DEFAULT_STEPS = 41
HEURISTIC_TOLERANCE = 0.25

_INV_PHI = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True, eq=False)
class ScanResult:
    parameter_name: str
    parameter_values: np.ndarray
    metric_name: str
    metric_values: np.ndarray
    argmin_value: float
    min_metric: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.asarray(self.parameter_values, dtype=float)
        m = np.asarray(self.metric_values, dtype=float)
        if p.shape != m.shape or p.size < 2:
            raise ValueError("scan needs equal-length arrays with at least two points")
        object.__setattr__(self, "parameter_values", p)
        object.__setattr__(self, "metric_values", m)


@dataclass(frozen=True)
class FiberOptimum:
    length: float  # m, golden-section refined argmin
    correlation_time: float  # s, metric at ``length``
    heuristic_length: float  # m, where HP(omega_s0) = OFP(omega_s0); nan if none
    at_boundary: bool
    heuristic_consistent: bool


def golden_section_minimize(f, a: float, b: float, tol: float):
    """Minimize a unimodal ``f`` on [a, b] until the bracket is narrower than ``tol``."""
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


class FiberSweep:
    """Correlation time vs signal-arm fiber length for one filtered TPSA.

    The detrended unit-length fiber phase is computed once; each length then
    costs one FFT.
    """

    def __init__(self, crystal: CrystalSpec, materials: MaterialSet,
                 filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT), grid=None):
        self.crystal = crystal
        self.materials = materials
        self.grid = grid if grid is not None else default_grid(crystal, materials, on_edge="warn")
        self.tpsa = apply_filters(tpsa(crystal, materials, self.grid), *filters)
        unit = FiberSpec(materials.fiber, length_signal=1.0)
        self._unit_phase = detrended_medium_phase(self.tpsa, unit)
        self._tau = tau_axis(self.grid)

    def correlation_time(self, length: float) -> float:
        amp = np.asarray(self.tpsa.amplitudes)
        if length:
            amp = amp * np.exp(1j * length * self._unit_phase)
        g = _normalized_intensity(_centered_transform(amp, self.grid.step))
        return fwhm(g, self._tau)

    def fourier_limit(self) -> float:
        return g2(ttpa(self.tpsa)).fourier_limit_fwhm

    def spectral_width(self) -> float:
        return spectral_width(self.tpsa)


def heuristic_fiber_length(crystal: CrystalSpec, materials: MaterialSet) -> float:
    """Signal-arm length where OFP matches HP at the degenerate frequency (nan if HP <= 0)."""
    omega_s0 = crystal.degenerate_signal_frequency
    hp = harris_curvature(crystal, materials, omega_s0)
    gvd = group_velocity_dispersion(materials.fiber, omega_s0)
    return hp / gvd if hp > 0 else math.nan


def default_fiber_range(crystal: CrystalSpec, materials: MaterialSet) -> tuple[float, float]:
    l_h = heuristic_fiber_length(crystal, materials)
    return 0.0, (max(2.0, 2.5 * l_h) if math.isfinite(l_h) else 2.0)


def scan_fiber_length(crystal: CrystalSpec, materials: MaterialSet,
                      filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT),
                      l_range=(0.0, 2.0), n_steps: int = DEFAULT_STEPS, grid=None,
                      sweep: FiberSweep | None = None) -> ScanResult:
    if n_steps < 3:
        raise ConfigError(f"fiber-length scan needs at least 3 steps, got {n_steps}")
    lo, hi = l_range
    if lo < 0 or hi < lo:
        raise ConfigError(f"bad fiber-length range {l_range}")
    sweep = sweep or FiberSweep(crystal, materials, filters, grid)
    lengths = np.linspace(lo, hi, n_steps)
    times = np.array([sweep.correlation_time(l) for l in lengths])
    i = int(np.argmin(times))
    return ScanResult("fiber_length_m", lengths, "correlation_time_s", times,
                      float(lengths[i]), float(times[i]))


def refine_optimal_fiber_length(scan: ScanResult, crystal: CrystalSpec, materials: MaterialSet,
                                filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT),
                                grid=None, resolution: float = FIBER_RESOLUTION,
                                metric=None, sweep: FiberSweep | None = None) -> FiberOptimum:
    """Golden-section refinement of a fiber-length scan's argmin.

    ``metric`` replaces the pipeline correlation time (length -> value) when given.
    """
    if metric is None:
        sweep = sweep or FiberSweep(crystal, materials, filters, grid)
        metric = sweep.correlation_time
    l_h = heuristic_fiber_length(crystal, materials)
    values = scan.parameter_values
    i = int(np.argmin(scan.metric_values))
    if i == 0 or i == values.size - 1:
        length, best = float(values[i]), float(scan.metric_values[i])
        at_boundary = True
    else:
        length, best = golden_section_minimize(metric, values[i - 1], values[i + 1], resolution)
        if best > scan.metric_values[i]:
            length, best = float(values[i]), float(scan.metric_values[i])
        at_boundary = False
    consistent = bool(math.isfinite(l_h) and abs(l_h - length) <= HEURISTIC_TOLERANCE * length)
    return FiberOptimum(float(length), float(best), l_h, at_boundary, consistent)


def optimize_fiber(crystal: CrystalSpec, materials: MaterialSet,
                   filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT), grid=None,
                   l_range=None, n_steps: int = DEFAULT_STEPS):
    """Scan then refine; returns ``(scan, optimum, sweep)``."""
    sweep = FiberSweep(crystal, materials, filters, grid)
    l_range = l_range if l_range is not None else default_fiber_range(crystal, materials)
    scan = scan_fiber_length(crystal, materials, filters, l_range, n_steps, sweep=sweep)
    return scan, refine_optimal_fiber_length(scan, crystal, materials, sweep=sweep), sweep


def scan_crystal_length(alpha: float, L_range, n_steps: int, materials: MaterialSet,
                        filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT),
                        pump_wavelength: float = 458e-9, degenerate_wavelength: float = 916e-9,
                        n_points: int | None = None, l_range=None) -> ScanResult:
    """Compressed correlation time vs crystal length for -|alpha| and +|alpha|.

    Each length gets its own fiber, optimized for the negative-chirp crystal;
    the positive-chirp crystal of the same length goes through that fiber too.
    """
    if n_steps < 2:
        raise ConfigError(f"crystal-length scan needs at least 2 steps, got {n_steps}")
    lengths = np.linspace(*L_range, n_steps)
    grid_kw = {"on_edge": "warn"} if n_points is None else {"n_points": n_points, "on_edge": "warn"}
    neg, pos, fibers, before = [], [], [], []
    for L in lengths:
        crystal = make_crystal(materials, L, -abs(alpha), pump_wavelength, degenerate_wavelength)
        grid = default_grid(crystal, materials, **grid_kw)
        _, opt, sweep = optimize_fiber(crystal, materials, filters, grid, l_range)
        neg.append(opt.correlation_time)
        fibers.append(opt.length)
        before.append(sweep.correlation_time(0.0))
        twin = FiberSweep(crystal.with_chirp(abs(alpha)), materials, filters,
                          default_grid(crystal.with_chirp(abs(alpha)), materials, **grid_kw))
        pos.append(twin.correlation_time(opt.length))
    neg = np.array(neg)
    i = int(np.argmin(neg))
    return ScanResult(
        "crystal_length_m", lengths, "correlation_time_s", neg, float(lengths[i]), float(neg[i]),
        extra={
            "correlation_time_positive_chirp_s": np.array(pos),
            "fiber_length_m": np.array(fibers),
            "uncompressed_correlation_time_s": np.array(before),
        },
    )


def scan_chirp(L: float, alpha_range, n_steps: int, materials: MaterialSet,
               filters: tuple[FilterSpec, FilterSpec] = (FLAT, FLAT),
               pump_wavelength: float = 458e-9, degenerate_wavelength: float = 916e-9,
               n_points: int | None = None, with_compression: bool = True) -> ScanResult:
    """Spectral FWHM (and optionally compressed correlation time) vs |alpha|.

    ``alpha_range`` holds magnitudes (m^-2). Compression uses the negative-chirp
    crystal with its own optimized signal-arm fiber.
    """
    if n_steps < 2:
        raise ConfigError(f"chirp scan needs at least 2 steps, got {n_steps}")
    lo, hi = (abs(a) for a in alpha_range)
    if lo == 0:
        raise ConfigError("chirp scan range must exclude alpha = 0")
    alphas = np.linspace(lo, hi, n_steps)
    grid_kw = {"on_edge": "warn"} if n_points is None else {"n_points": n_points, "on_edge": "warn"}
    widths, times, fibers, limits = [], [], [], []
    for a in alphas:
        crystal = make_crystal(materials, L, -a, pump_wavelength, degenerate_wavelength)
        grid = default_grid(crystal, materials, **grid_kw)
        if with_compression:
            _, opt, sweep = optimize_fiber(crystal, materials, filters, grid)
            times.append(opt.correlation_time)
            fibers.append(opt.length)
            limits.append(sweep.fourier_limit())
        else:
            sweep = FiberSweep(crystal, materials, filters, grid)
        widths.append(sweep.spectral_width())
    widths = np.array(widths)
    extra = {}
    if with_compression:
        extra = {
            "correlation_time_s": np.array(times),
            "fiber_length_m": np.array(fibers),
            "fourier_limit_s": np.array(limits),
        }
    # a width scan has no minimization; argmin/min_metric record the narrowest point
    i = int(np.argmin(widths))
    return ScanResult("chirp_alpha_per_m2", alphas, "spectral_width_m", widths,
                      float(alphas[i]), float(widths[i]), extra=extra)
