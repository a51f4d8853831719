"""
Linearly chirped QPM grating and the two-photon spectral amplitude (TPSA).

The grating's local wavevector runs as ``kappa(z) = K0 - 2 alpha (z + L/2)``
over the crystal ``z in [-L, 0]``, i.e. the grating phase is
``-alpha (z + L/2)^2`` about the crystal center. With a cw pump the
amplitude collapses onto the line ``omega_i = omega_p - omega_s`` and reads

    F(omega_s) = int_{-L}^{0} exp(-i dk z - i alpha (z + L/2)^2) dz

with ``dk = k_p - k_s - k_i - K0``. Completing the square gives

    F = e^{i phi} sqrt(pi)/2 e^{-i pi/4}
        [erf(r (L alpha - dk) / (2 sqrt(alpha))) + erf(r (L alpha + dk) / (2 sqrt(alpha)))] / sqrt(alpha)

with ``phi = dk L/2 + dk^2/(4 alpha)`` and ``r = e^{i pi/4}``. Both routes are
implemented: :func:`tpsa_closed_form` and the quadrature :func:`tpsa_numeric`
share the same normalization, so they agree pointwise, not only up to a
constant.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c
from scipy.special import erf

from .dispersion import MaterialSet, wavevector
from .errors import ConfigError, DegenerateInputError, NumericError

POLARIZATION_AXES = ("ordinary", "extraordinary")

DEFAULT_N_POINTS = 65536
# grid policy: support threshold on |F| and span margin
SUPPORT_THRESHOLD = 1e-4
SPAN_MARGIN = 1.5
# accepted spectrum level |F|^2 / max |F|^2 at the grid edges
EDGE_SPECTRUM_LIMIT = 1e-3
_PRESCAN_POINTS = 4097

# quadrature policy
GL_ORDER = 8
PANELS_PER_PERIOD = 8
QUAD_RTOL = 1e-9
_QUAD_MAX_DOUBLINGS = 10
_QUAD_CHUNK = 1 << 22  # integrand evaluations per vectorized block

log = logging.getLogger(__name__)

_ROOT_I = np.exp(1j * np.pi / 4)  # (-1)^(1/4), principal branch


@dataclass(frozen=True)
class CrystalSpec:
    """Chirped-QPM crystal. All quantities SI: m, m^-2, rad/m."""

    length: float
    chirp_alpha: float
    pump_wavelength: float
    degenerate_signal_wavelength: float
    grating_K0: float
    pump_axis: str = "ordinary"
    signal_axis: str = "extraordinary"
    idler_axis: str = "ordinary"

    def __post_init__(self):
        if not self.length > 0:
            raise ConfigError(f"crystal length must be positive, got {self.length}")
        if not self.grating_K0 > 0:
            raise ConfigError(f"grating K0 must be positive, got {self.grating_K0}")
        for axis in (self.pump_axis, self.signal_axis, self.idler_axis):
            if axis not in POLARIZATION_AXES:
                raise ConfigError(f"unknown polarization axis {axis!r}")
        # kappa spans K0 -/+ alpha L over the crystal
        if self.grating_K0 - abs(self.chirp_alpha) * self.length <= 0:
            raise ConfigError(
                f"local grating wavevector turns non-positive: K0={self.grating_K0:.6g} rad/m, "
                f"|alpha| L={abs(self.chirp_alpha) * self.length:.6g} rad/m"
            )

    @property
    def pump_frequency(self) -> float:
        return 2 * np.pi * c / self.pump_wavelength

    @property
    def degenerate_signal_frequency(self) -> float:
        return 2 * np.pi * c / self.degenerate_signal_wavelength

    def local_wavevector(self, z):
        """kappa(z) = K0 - 2 alpha (z + L/2), z in [-L, 0]."""
        return self.grating_K0 - 2 * self.chirp_alpha * (np.asarray(z) + self.length / 2)

    def with_chirp(self, alpha: float) -> "CrystalSpec":
        return replace(self, chirp_alpha=alpha)


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform signal-frequency grid; sample ``n_points // 2`` sits on ``center``."""

    center: float
    span: float
    n_points: int

    def __post_init__(self):
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ConfigError(f"n_points must be a power of two >= 2, got {n}")
        if not (self.span > 0 and self.center > 0):
            raise ConfigError("grid center and span must be positive")
        if self.span / 2 >= self.center:
            raise ConfigError("grid reaches non-positive frequencies")

    @property
    def step(self) -> float:
        return self.span / self.n_points

    @property
    def omega(self) -> np.ndarray:
        return self.center + (np.arange(self.n_points) - self.n_points // 2) * self.step


@dataclass(frozen=True, eq=False)
class Tpsa:
    """TPSA sampled on ``grid``; the idler frequency is ``pump_frequency - omega``."""

    grid: FrequencyGrid
    amplitudes: np.ndarray
    pump_frequency: float

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} amplitudes, got shape {amp.shape}")
        if not np.all(np.isfinite(amp)):
            bad = int(np.flatnonzero(~np.isfinite(amp))[0])
            raise NumericError(f"non-finite TPSA amplitude at omega={self.grid.omega[bad]:.9e}")
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def omega(self) -> np.ndarray:
        return self.grid.omega

    @property
    def idler_omega(self) -> np.ndarray:
        return self.pump_frequency - self.grid.omega

    @property
    def wavelength(self) -> np.ndarray:
        return 2 * np.pi * c / self.grid.omega

    @property
    def spectrum(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_amplitudes(self, amplitudes) -> "Tpsa":
        return Tpsa(self.grid, amplitudes, self.pump_frequency)

    def edge_ratio(self) -> float:
        """Largest spectrum value at the two grid edges relative to the peak."""
        s = self.spectrum
        peak = s.max()
        return float(max(s[0], s[-1]) / peak) if peak > 0 else 0.0


def _k(materials: MaterialSet, axis: str, omega):
    return wavevector(materials.crystal_axis(axis), omega)


def solve_K0(materials: MaterialSet, pump_wavelength: float, degenerate_wavelength: float,
             pump_axis="ordinary", signal_axis="extraordinary", idler_axis="ordinary") -> float:
    """Grating wavevector giving perfect first-order QPM at the crystal center."""
    omega_p = 2 * np.pi * c / pump_wavelength
    omega_s0 = 2 * np.pi * c / degenerate_wavelength
    if not 0 < omega_s0 < omega_p:
        raise ConfigError("degenerate signal frequency must lie between 0 and the pump frequency")
    K0 = (_k(materials, pump_axis, omega_p) - _k(materials, signal_axis, omega_s0)
          - _k(materials, idler_axis, omega_p - omega_s0))
    if K0 <= 0:
        raise ConfigError(f"phase matching needs a negative grating wavevector ({K0:.6g} rad/m)")
    return K0


def make_crystal(materials: MaterialSet, length: float, alpha: float,
                 pump_wavelength: float = 458e-9, degenerate_wavelength: float = 916e-9,
                 pump_axis="ordinary", signal_axis="extraordinary",
                 idler_axis="ordinary") -> CrystalSpec:
    """Build a :class:`CrystalSpec` with K0 solved from ``materials``."""
    axes = dict(pump_axis=pump_axis, signal_axis=signal_axis, idler_axis=idler_axis)
    K0 = solve_K0(materials, pump_wavelength, degenerate_wavelength, **axes)
    crystal = CrystalSpec(length, alpha, pump_wavelength, degenerate_wavelength, K0, **axes)
    residual = delta_k(crystal, materials, crystal.degenerate_signal_frequency)
    if abs(residual) >= 1e-6 * K0:
        raise NumericError(f"K0 phase-matching residual {residual:.3e} rad/m too large")
    return crystal


def delta_k(crystal: CrystalSpec, materials: MaterialSet, omega_s):
    """dk = k_p(omega_p) - k_s(omega_s) - k_i(omega_p - omega_s) - K0 (rad/m)."""
    omega_p = crystal.pump_frequency
    omega_s = np.asarray(omega_s, dtype=float)
    dk = (_k(materials, crystal.pump_axis, omega_p)
          - _k(materials, crystal.signal_axis, omega_s)
          - _k(materials, crystal.idler_axis, omega_p - omega_s)
          - crystal.grating_K0)
    return dk if np.ndim(dk) else float(dk)


def phase_phi(crystal: CrystalSpec, dk):
    """phi = dk L / 2 + dk^2 / (4 alpha)."""
    alpha = crystal.chirp_alpha
    if alpha == 0:
        raise DegenerateInputError("phase factor is undefined for an unchirped grating (alpha = 0)")
    dk = np.asarray(dk, dtype=float)
    phi = dk * crystal.length / 2 + dk**2 / (4 * alpha)
    return phi if phi.ndim else float(phi)


def _sqrt_alpha(alpha: float) -> complex:
    # alpha < 0 continues as i sqrt|alpha|
    return complex(math.sqrt(alpha)) if alpha > 0 else 1j * math.sqrt(-alpha)


def chirped_amplitude(dk, length: float, alpha: float) -> np.ndarray:
    """Closed-form amplitude as a function of the mismatch ``dk`` (rad/m)."""
    if alpha == 0:
        raise DegenerateInputError("closed form needs alpha != 0; use tpsa_numeric")
    dk = np.asarray(dk, dtype=float)
    s = _sqrt_alpha(alpha)
    arg_minus = _ROOT_I * (length * alpha - dk) / (2 * s)
    arg_plus = _ROOT_I * (length * alpha + dk) / (2 * s)
    erf_sum = erf(arg_minus) + erf(arg_plus)
    if not np.all(np.isfinite(erf_sum)):
        bad = np.flatnonzero(~np.isfinite(erf_sum))[0]
        raise NumericError(
            f"complex erf failed near argument {np.ravel(arg_minus)[bad]:.6g} "
            f"/ {np.ravel(arg_plus)[bad]:.6g}"
        )
    phi = dk * length / 2 + dk**2 / (4 * alpha)
    return np.exp(1j * phi) * (0.5 * math.sqrt(math.pi) / _ROOT_I) * erf_sum / s


def tpsa_closed_form(crystal: CrystalSpec, materials: MaterialSet, grid: FrequencyGrid) -> Tpsa:
    dk = delta_k(crystal, materials, grid.omega)
    return Tpsa(grid, chirped_amplitude(dk, crystal.length, crystal.chirp_alpha),
                crystal.pump_frequency)


def _panel_count(dk, length, alpha):
    # largest |d/dz phase| over the crystal is |dk| + |alpha| L
    rate = np.abs(dk) + abs(alpha) * length
    n = np.ceil(PANELS_PER_PERIOD * length * rate / (2 * np.pi)).astype(np.int64)
    n = np.maximum(n, 4)
    return 2 ** np.ceil(np.log2(n)).astype(np.int64)


def _gl_integral(dk, length, alpha, n_panels):
    """Fixed-panel Gauss-Legendre value of the chirped integral for each dk."""
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    half = length / (2 * n_panels)
    mids = -length + (2 * np.arange(n_panels) + 1) * half
    z = (mids[:, None] + half * x[None, :]).ravel()
    wz = np.tile(w, n_panels) * half
    u2 = (z + length / 2) ** 2
    out = np.empty(dk.shape, dtype=complex)
    rows = max(1, _QUAD_CHUNK // z.size)
    for start in range(0, dk.size, rows):
        block = dk[start:start + rows, None]
        phase = -block * z[None, :] - alpha * u2[None, :]
        out[start:start + rows] = np.exp(1j * phase) @ wz
    return out


def chirped_integral(dk, length: float, alpha: float) -> np.ndarray:
    """Quadrature of int_{-L}^{0} exp(-i dk z - i alpha (z+L/2)^2) dz.

    Panels span at most 1/8 of the local oscillation period; the panel count
    doubles until two successive values agree to ``QUAD_RTOL``.
    """
    dk = np.atleast_1d(np.asarray(dk, dtype=float))
    result = np.empty(dk.shape, dtype=complex)
    atol = 1e-15 * length
    n0 = _panel_count(dk, length, alpha)
    for n in np.unique(n0):
        idx = np.flatnonzero(n0 == n)
        coarse = _gl_integral(dk[idx], length, alpha, int(n))
        panels = int(n)
        for _ in range(_QUAD_MAX_DOUBLINGS):
            panels *= 2
            fine = _gl_integral(dk[idx], length, alpha, panels)
            err = np.abs(fine - coarse)
            done = err <= QUAD_RTOL * np.abs(fine) + atol
            result[idx[done]] = fine[done]
            idx, coarse = idx[~done], fine[~done]
            if idx.size == 0:
                break
        else:
            worst = idx[np.argmax(err[~done])]
            raise NumericError(
                f"chirped-grating quadrature did not converge; worst dk={dk[worst]:.6g} rad/m"
            )
    return result


def tpsa_numeric(crystal: CrystalSpec, materials: MaterialSet, grid: FrequencyGrid) -> Tpsa:
    """TPSA by direct quadrature of the grating integral; valid for any alpha."""
    omega = grid.omega
    dk = delta_k(crystal, materials, omega)
    try:
        amp = chirped_integral(dk, crystal.length, crystal.chirp_alpha)
    except NumericError as exc:
        raise NumericError(f"{exc} (grid spans {omega[0]:.6e}..{omega[-1]:.6e} rad/s)") from None
    return Tpsa(grid, amp, crystal.pump_frequency)


def tpsa(crystal: CrystalSpec, materials: MaterialSet, grid: FrequencyGrid) -> Tpsa:
    """Closed form when chirped, quadrature for an unchirped grating."""
    if crystal.chirp_alpha == 0:
        return tpsa_numeric(crystal, materials, grid)
    return tpsa_closed_form(crystal, materials, grid)


def signal_window(crystal: CrystalSpec, materials: MaterialSet) -> tuple[float, float]:
    """Signal-frequency interval where signal and idler stay inside every model's range."""
    lam_lo, lam_hi = materials.wavelength_window
    omega_p = crystal.pump_frequency
    w_min, w_max = 2 * np.pi * c / lam_hi, 2 * np.pi * c / lam_lo
    lo = max(w_min, omega_p - w_max)
    hi = min(w_max, omega_p - w_min)
    if not lo < crystal.degenerate_signal_frequency < hi:
        raise ConfigError("degenerate signal frequency lies outside the material window")
    return lo, hi


def default_grid(crystal: CrystalSpec, materials: MaterialSet,
                 n_points: int = DEFAULT_N_POINTS, on_edge: str = "raise") -> FrequencyGrid:
    """Grid centered on the degenerate frequency.

    A coarse pre-scan over the material window finds where |F| exceeds
    ``SUPPORT_THRESHOLD`` of its peak; the span is ``SPAN_MARGIN`` times that
    support, clipped to the window. The finished grid must leave the spectrum
    below ``EDGE_SPECTRUM_LIMIT`` of its peak at both edges; ``on_edge``
    selects what a violation does: "raise", "warn" (log and continue) or
    "ignore".
    """
    if on_edge not in ("raise", "warn", "ignore"):
        raise ValueError(f"on_edge must be raise, warn or ignore, got {on_edge!r}")
    center = crystal.degenerate_signal_frequency
    lo, hi = signal_window(crystal, materials)
    # stay a hair inside the window so the edge samples never round out of range
    max_half = (1 - 1e-9) * min(center - lo, hi - center)
    probe = FrequencyGrid(center, 2 * max_half, _PRESCAN_POINTS - 1)
    amp = np.abs(tpsa(crystal, materials, probe).amplitudes)
    support = probe.omega[amp > SUPPORT_THRESHOLD * amp.max()]
    half = SPAN_MARGIN * np.max(np.abs(support - center))
    grid = FrequencyGrid(center, 2 * min(half, max_half), n_points)
    if on_edge != "ignore":
        ratio = tpsa(crystal, materials, grid).edge_ratio()
        if ratio >= EDGE_SPECTRUM_LIMIT:
            msg = (f"spectrum at the grid edge is {ratio:.2e} of its peak "
                   f"(limit {EDGE_SPECTRUM_LIMIT:g}); the material window is too narrow")
            if on_edge == "raise":
                raise NumericError(msg)
            log.warning("L=%g m, alpha=%g m^-2: %s", crystal.length, crystal.chirp_alpha, msg)
    return grid
