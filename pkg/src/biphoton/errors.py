"""Exception types raised across the package."""


class BiphotonError(Exception):
    """Base class for all errors raised by biphoton."""


class DispersionDomainError(BiphotonError, ValueError):
    """A wavelength fell outside a refractive-index model's validity range."""


class ConfigError(BiphotonError, ValueError):
    """Invalid or unphysical configuration."""


class DegenerateInputError(BiphotonError, ValueError):
    """Input has no well-defined result (zero chirp, flat profile, ...)."""


class NumericError(BiphotonError, ArithmeticError):
    """A numerical evaluation failed (non-finite values, non-convergence)."""
