"""
From the spectral amplitude to the measured correlation function.

The temporal amplitude uses the ``e^{+i omega_s tau}`` kernel,

    F(tau) = d_omega * sum_j F(omega_j) exp(i (omega_j - omega_c) tau),

with ``tau_m = (m - N/2) * 2 pi / span``. Dropping ``exp(i omega_c tau)``
leaves ``|F(tau)|`` unchanged. With this normalization the discrete Parseval
identity reads ``sum |F(omega)|^2 d_omega = sum |F(tau)|^2 d_tau / (2 pi)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c
from scipy.integrate import trapezoid

from .crystal import Tpsa
from .dispersion import SellmeierModel, wavevector
from .errors import ConfigError, DegenerateInputError


@dataclass(frozen=True)
class FilterSpec:
    """Spectral response of one detection arm (flat, or Gaussian in omega)."""

    kind: str = "flat"
    center: float = 0.0  # rad/s
    width: float = 0.0  # rad/s, the delta-omega of exp(-(w - wc)^2 / dw^2)

    def __post_init__(self):
        if self.kind not in ("flat", "gaussian"):
            raise ConfigError(f"unknown filter kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.width > 0 and self.center > 0):
            raise ConfigError("gaussian filter needs positive center and width")

    @classmethod
    def flat(cls) -> "FilterSpec":
        return cls("flat")

    @classmethod
    def gaussian_nm(cls, center_nm: float, width_nm: float) -> "FilterSpec":
        """Gaussian response from a center wavelength and a wavelength width.

        The width converts at the center, ``dw = 2 pi c dlambda / lambda_c^2``.
        """
        lam = center_nm * 1e-9
        return cls("gaussian", 2 * np.pi * c / lam, 2 * np.pi * c * width_nm * 1e-9 / lam**2)

    def response(self, omega):
        omega = np.asarray(omega, dtype=float)
        if self.kind == "flat":
            return np.ones_like(omega)
        return np.exp(-((omega - self.center) / self.width) ** 2)


FLAT = FilterSpec.flat()


@dataclass(frozen=True)
class FiberSpec:
    material: SellmeierModel
    length_signal: float = 0.0  # m
    length_idler: float = 0.0  # m

    def __post_init__(self):
        if self.length_signal < 0 or self.length_idler < 0:
            raise ConfigError("fiber lengths must be >= 0")

    def phase(self, omega_s, omega_p):
        """k_m(omega_s) l_s + k_m(omega_p - omega_s) l_i."""
        omega_s = np.asarray(omega_s, dtype=float)
        out = np.zeros_like(omega_s)
        if self.length_signal:
            out = out + wavevector(self.material, omega_s) * self.length_signal
        if self.length_idler:
            out = out + wavevector(self.material, omega_p - omega_s) * self.length_idler
        return out


@dataclass(frozen=True, eq=False)
class TemporalAmplitude:
    tau: np.ndarray
    values: np.ndarray
    source: Tpsa


@dataclass(frozen=True, eq=False)
class TemporalProfile:
    """Peak-normalized G2(tau) with its FWHM and the transform-limited FWHM."""

    tau_samples: np.ndarray
    g2_values: np.ndarray
    fwhm: float
    fourier_limit_fwhm: float

    @property
    def peak_tau(self) -> float:
        return float(self.tau_samples[np.argmax(self.g2_values)])


def apply_filters(tpsa: Tpsa, signal_filter: FilterSpec = FLAT,
                  idler_filter: FilterSpec = FLAT) -> Tpsa:
    weight = signal_filter.response(tpsa.omega) * idler_filter.response(tpsa.idler_omega)
    return tpsa.with_amplitudes(tpsa.amplitudes * weight)


def detrended_medium_phase(tpsa: Tpsa, fiber: FiberSpec) -> np.ndarray:
    """Medium phase minus its value and central-difference slope at the grid center.

    The removed part only delays the wavepacket as a whole; without it the
    peak would leave the FFT window.
    """
    grid = tpsa.grid
    center, h = grid.center, grid.step
    omega_p = tpsa.pump_frequency
    phase = fiber.phase(tpsa.omega, omega_p)
    p0, p_minus, p_plus = fiber.phase(np.array([center, center - h, center + h]), omega_p)
    slope = (p_plus - p_minus) / (2 * h)
    return (phase - p0) - slope * (tpsa.omega - center)


def apply_medium(tpsa: Tpsa, fiber: FiberSpec, detrend: bool = True) -> Tpsa:
    """Multiply by exp(i [k_m(w_s) l_s + k_m(w_i) l_i]); the modulus is untouched."""
    if not (fiber.length_signal or fiber.length_idler):
        return tpsa
    if detrend:
        phase = detrended_medium_phase(tpsa, fiber)
    else:
        phase = fiber.phase(tpsa.omega, tpsa.pump_frequency)
    return tpsa.with_amplitudes(tpsa.amplitudes * np.exp(1j * phase))


def _centered_transform(amplitudes, step):
    n = amplitudes.size
    return n * step * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(amplitudes)))


def tau_axis(grid) -> np.ndarray:
    n = grid.n_points
    return (np.arange(n) - n // 2) * (2 * np.pi / grid.span)


def ttpa(tpsa: Tpsa) -> TemporalAmplitude:
    """Temporal two-photon amplitude on the centered tau grid."""
    values = _centered_transform(np.asarray(tpsa.amplitudes), tpsa.grid.step)
    return TemporalAmplitude(tau_axis(tpsa.grid), values, tpsa)


def _normalized_intensity(values):
    g = np.abs(values) ** 2
    peak = g.max()
    if not peak > 0:
        raise DegenerateInputError("temporal amplitude vanishes identically")
    return g / peak


def g2(amplitude: TemporalAmplitude) -> TemporalProfile:
    """G2(tau) = |F(tau)|^2, peak-normalized, with FWHM and transform-limited FWHM."""
    g = _normalized_intensity(amplitude.values)
    source = amplitude.source
    limited = _centered_transform(np.abs(source.amplitudes), source.grid.step)
    g_limited = _normalized_intensity(limited)
    return TemporalProfile(
        tau_samples=amplitude.tau,
        g2_values=g,
        fwhm=fwhm(g, amplitude.tau),
        fourier_limit_fwhm=fwhm(g_limited, amplitude.tau),
    )


def half_max_crossings(samples, abscissa) -> tuple[float, float]:
    """Interpolated half-maximum crossings bracketing the global maximum."""
    y = np.asarray(samples, dtype=float)
    x = np.asarray(abscissa, dtype=float)
    i = int(np.argmax(y))
    if not y[i] > 0:
        raise DegenerateInputError("no strictly positive sample")
    half = 0.5 * y[i]
    below_left = np.flatnonzero(y[:i] < half)
    below_right = np.flatnonzero(y[i:] < half)
    if below_left.size == 0 or below_right.size == 0:
        raise DegenerateInputError("profile does not fall below half maximum on both sides")
    j = below_left[-1]
    left = x[j] + (half - y[j]) * (x[j + 1] - x[j]) / (y[j + 1] - y[j])
    k = i + below_right[0]
    right = x[k - 1] + (y[k - 1] - half) * (x[k] - x[k - 1]) / (y[k - 1] - y[k])
    return float(left), float(right)


def outer_half_max_crossings(samples, abscissa) -> tuple[float, float]:
    """Interpolated first and last half-maximum crossings of the whole profile.

    Unlike :func:`half_max_crossings` this bridges interior dips below half
    maximum, such as the ripple on a chirped-grating plateau.
    """
    y = np.asarray(samples, dtype=float)
    x = np.asarray(abscissa, dtype=float)
    peak = y.max()
    if not peak > 0:
        raise DegenerateInputError("no strictly positive sample")
    half = 0.5 * peak
    above = np.flatnonzero(y >= half)
    i, k = above[0], above[-1]
    if i == 0 or k == y.size - 1:
        raise DegenerateInputError("profile does not fall below half maximum on both sides")
    left = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
    right = x[k] + (y[k] - half) * (x[k + 1] - x[k]) / (y[k] - y[k + 1])
    return float(left), float(right)


def fwhm(samples, abscissa) -> float:
    """Width of the connected half-maximum interval around the global maximum."""
    left, right = half_max_crossings(samples, abscissa)
    return right - left


def spectral_width(tpsa: Tpsa) -> float:
    """FWHM of |F|^2 expressed as a wavelength interval (m).

    Taken between the outermost half-maximum crossings, so plateau ripple
    does not split the band.
    """
    w_left, w_right = outer_half_max_crossings(tpsa.spectrum, tpsa.omega)
    return 2 * np.pi * c / w_left - 2 * np.pi * c / w_right


def mean_wavelength(tpsa: Tpsa) -> float:
    """Photon-number weighted mean signal wavelength (m)."""
    s = tpsa.spectrum
    return float(np.sum(tpsa.wavelength * s) / np.sum(s))


def coincidence_rate(profile: TemporalProfile, window) -> float:
    """Fraction of G2 inside a rectangular window of width ``window`` (s) centered on the peak."""
    if window < 0:
        raise ValueError("coincidence window must be >= 0")
    tau, g = profile.tau_samples, profile.g2_values
    total = trapezoid(g, tau)
    a = max(profile.peak_tau - window / 2, tau[0])
    b = min(profile.peak_tau + window / 2, tau[-1])
    if b <= a:
        return 0.0
    inside = (tau > a) & (tau < b)
    t = np.concatenate(([a], tau[inside], [b]))
    y = np.concatenate(([np.interp(a, tau, g)], g[inside], [np.interp(b, tau, g)]))
    return float(trapezoid(y, t) / total)
