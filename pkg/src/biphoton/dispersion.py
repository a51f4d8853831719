"""
Refractive-index models and spectral-phase curvature.

Wavelengths enter the public functions in meters and angular frequencies in
rad/s; the Sellmeier formulas themselves are evaluated in micrometers, which
is the convention of the published coefficient sets in ``data/materials.toml``.

Two curvature quantities are compared when choosing a compensating fiber:

* HP  = -d^2 phi / d omega_s^2, the curvature of the chirped-grating phase
  factor that has to be cancelled;
* OFP = d^2/d omega_s^2 [k_m(omega_s) l_s + k_m(omega_p - omega_s) l_i], the
  curvature added by fiber in the signal and idler arms.
"""

from __future__ import annotations

import enum
import os
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.constants import c

from .errors import ConfigError, DispersionDomainError, NumericError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MATERIALS_ENV_VAR = "BIPHOTON_MATERIALS"

# every model must cover the simulation window
REQUIRED_WINDOW_UM = (0.40, 1.60)

# relative slack when checking wavelengths against a validity bound, so that
# round-tripping a bound through omega = 2 pi c / lambda does not trip it
_RANGE_RTOL = 1e-12

DEFAULT_STEP_FRACTION = 1e-4


class FormulaKind(str, enum.Enum):
    """Sellmeier variants understood by :func:`refractive_index`.

    SELLMEIER     n^2 = A + sum B_i l^2/(l^2 - C_i)             [A, B1, C1, ...]
    SELLMEIER_IR  n^2 = A + sum B_i l^2/(l^2 - C_i) - D l^2     [A, B1, C1, ..., D]
    """

    SELLMEIER = "sellmeier"
    SELLMEIER_IR = "sellmeier_ir"


@dataclass(frozen=True)
class SellmeierModel:
    name: str
    coefficients: tuple[float, ...]
    formula_kind: FormulaKind
    validity_range: tuple[float, float]  # micrometers
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        object.__setattr__(self, "formula_kind", FormulaKind(self.formula_kind))
        lo, hi = (float(v) for v in self.validity_range)
        object.__setattr__(self, "validity_range", (lo, hi))
        if not 0 < lo < hi:
            raise ConfigError(f"{self.name}: bad validity range {self.validity_range}")
        n_coef = len(self.coefficients)
        if self.formula_kind is FormulaKind.SELLMEIER:
            ok = n_coef >= 3 and n_coef % 2 == 1
        else:
            ok = n_coef >= 4 and n_coef % 2 == 0
        if not ok:
            raise ConfigError(
                f"{self.name}: {n_coef} coefficients do not fit formula_kind "
                f"'{self.formula_kind.value}'"
            )
        with np.errstate(invalid="ignore", divide="ignore"):
            n = np.sqrt(self._n_squared(np.linspace(lo, hi, 1000)))
        if not np.all(np.isfinite(n)) or np.any(n <= 1.0):
            raise ConfigError(f"{self.name}: index not real and > 1 over {self.validity_range} um")

    def _n_squared(self, lam_um):
        coef = self.coefficients
        if self.formula_kind is FormulaKind.SELLMEIER_IR:
            poles, ir = coef[1:-1], coef[-1]
        else:
            poles, ir = coef[1:], 0.0
        lam2 = np.asarray(lam_um, dtype=float) ** 2
        n2 = coef[0] - ir * lam2
        for b, c_pole in zip(poles[0::2], poles[1::2]):
            n2 = n2 + b * lam2 / (lam2 - c_pole)
        return n2

    def covers(self, lo_um: float, hi_um: float) -> bool:
        return self.validity_range[0] <= lo_um and hi_um <= self.validity_range[1]


@dataclass(frozen=True)
class MaterialSet:
    ktp_ordinary: SellmeierModel
    ktp_extraordinary: SellmeierModel
    fiber: SellmeierModel

    def __post_init__(self):
        for model in (self.ktp_ordinary, self.ktp_extraordinary, self.fiber):
            if not model.covers(*REQUIRED_WINDOW_UM):
                raise ConfigError(
                    f"{model.name}: validity range {model.validity_range} um does not "
                    f"cover the simulation window {REQUIRED_WINDOW_UM} um"
                )

    def crystal_axis(self, axis: str) -> SellmeierModel:
        if axis == "ordinary":
            return self.ktp_ordinary
        if axis == "extraordinary":
            return self.ktp_extraordinary
        raise ConfigError(f"unknown polarization axis {axis!r}")

    @property
    def wavelength_window(self) -> tuple[float, float]:
        """Wavelength interval (m) in which every model is valid."""
        models = (self.ktp_ordinary, self.ktp_extraordinary, self.fiber)
        lo = max(m.validity_range[0] for m in models)
        hi = min(m.validity_range[1] for m in models)
        return lo * 1e-6, hi * 1e-6


def default_materials_path() -> Path:
    env = os.environ.get(MATERIALS_ENV_VAR)
    if env:
        return Path(env)
    return Path(str(resources.files("biphoton") / "data" / "materials.toml"))


def load_model_library(path=None) -> tuple[dict[str, SellmeierModel], dict]:
    """Read a materials file; return ``({name: model}, [materials] table)``."""
    path = Path(path) if path is not None else default_materials_path()
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"materials file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None

    allowed = {"name", "formula_kind", "coefficients", "validity_range_um", "source"}
    library = {}
    for i, rec in enumerate(doc.get("model", [])):
        unknown = set(rec) - allowed
        if unknown:
            raise ConfigError(f"{path}: model #{i}: unknown key(s) {sorted(unknown)}")
        try:
            model = SellmeierModel(
                name=rec["name"],
                coefficients=tuple(rec["coefficients"]),
                formula_kind=FormulaKind(rec["formula_kind"]),
                validity_range=tuple(rec["validity_range_um"]),
                source=rec.get("source", ""),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: model #{i}: missing key {exc.args[0]!r}") from None
        except ValueError as exc:
            raise ConfigError(f"{path}: model #{i}: {exc}") from None
        library[model.name] = model
    return library, doc.get("materials", {})


def load_materials(path=None, fiber: str | None = None) -> MaterialSet:
    """Load the crystal and fiber models named in the ``[materials]`` table.

    ``fiber`` overrides the fiber model by name.
    """
    library, table = load_model_library(path)
    names = dict(table)
    if fiber is not None:
        names["fiber"] = fiber
    picked = {}
    for role in ("ktp_ordinary", "ktp_extraordinary", "fiber"):
        name = names.get(role)
        if name is None:
            raise ConfigError(f"materials file names no model for '{role}'")
        if name not in library:
            raise ConfigError(f"unknown material model {name!r} for '{role}'")
        picked[role] = library[name]
    return MaterialSet(**picked)


def refractive_index(model: SellmeierModel, wavelength):
    """Refractive index at vacuum ``wavelength`` (m); scalar or array."""
    lam_um = np.asarray(wavelength, dtype=float) * 1e6
    lo, hi = model.validity_range
    if np.any(~np.isfinite(lam_um)):
        raise DispersionDomainError(f"{model.name}: non-finite wavelength")
    if np.any(lam_um < lo * (1 - _RANGE_RTOL)):
        raise DispersionDomainError(
            f"{model.name}: wavelength {lam_um.min():.6g} um below validity bound {lo} um"
        )
    if np.any(lam_um > hi * (1 + _RANGE_RTOL)):
        raise DispersionDomainError(
            f"{model.name}: wavelength {lam_um.max():.6g} um above validity bound {hi} um"
        )
    n = np.sqrt(model._n_squared(lam_um))
    return n if n.ndim else float(n)


def wavevector(model: SellmeierModel, angular_frequency):
    """k = n(2 pi c / omega) omega / c in rad/m."""
    omega = np.asarray(angular_frequency, dtype=float)
    if np.any(omega <= 0):
        raise DispersionDomainError(f"{model.name}: angular frequency must be positive")
    k = refractive_index(model, 2 * np.pi * c / omega) * omega / c
    return k if np.ndim(k) else float(k)


def phase_curvature(phase_fn, omega, step=None):
    """Second derivative of ``phase_fn`` at ``omega`` (s^2).

    Central second differences at ``step`` and ``2*step`` combined by one
    Richardson extrapolation, so polynomials up to degree three come out
    exact up to rounding. ``phase_fn`` is called with arrays shaped like
    ``omega``. Default step is ``1e-4 * omega``.
    """
    omega = np.asarray(omega, dtype=float)
    h = DEFAULT_STEP_FRACTION * omega if step is None else np.asarray(step, dtype=float)
    if np.any(h <= 0):
        raise ValueError("finite-difference step must be positive")
    f = {j: np.asarray(phase_fn(omega + j * h), dtype=float) for j in (-2, -1, 0, 1, 2)}
    if not all(np.all(np.isfinite(v)) for v in f.values()):
        raise NumericError(f"phase function not finite within 2 steps of omega={omega}")
    d_h = (f[1] - 2 * f[0] + f[-1]) / h**2
    d_2h = (f[2] - 2 * f[0] + f[-2]) / (2 * h) ** 2
    out = (4 * d_h - d_2h) / 3
    return out if out.ndim else float(out)


def group_velocity_dispersion(model: SellmeierModel, angular_frequency):
    """d^2 k / d omega^2 (s^2/m)."""
    return phase_curvature(lambda w: wavevector(model, w), angular_frequency)


def harris_curvature(crystal, materials: MaterialSet, omega_s):
    """HP(omega_s) = -d^2/d omega_s^2 phi(omega_s, omega_p - omega_s)."""
    from .crystal import delta_k, phase_phi

    return -phase_curvature(
        lambda w: phase_phi(crystal, delta_k(crystal, materials, w)), omega_s
    )


def fiber_curvature(fiber, omega_s, omega_p):
    """OFP(omega_s) for fiber lengths ``fiber.length_signal``/``length_idler``.

    Each arm is differentiated on its own and scaled by its length, which
    keeps the result exactly linear in each length and additive over arms.
    """
    omega_s = np.asarray(omega_s, dtype=float)
    out = np.zeros_like(omega_s)
    if fiber.length_signal:
        out = out + fiber.length_signal * group_velocity_dispersion(fiber.material, omega_s)
    if fiber.length_idler:
        out = out + fiber.length_idler * group_velocity_dispersion(
            fiber.material, omega_p - omega_s
        )
    return out if out.ndim else float(out)
