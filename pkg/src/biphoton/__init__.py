"""Biphoton generation in linearly chirped QPM crystals and temporal
compression of the two-photon wavepacket in standard optical fiber."""

from .errors import (
    BiphotonError,
    ConfigError,
    DegenerateInputError,
    DispersionDomainError,
    NumericError,
)
from .dispersion import (
    FormulaKind,
    MaterialSet,
    SellmeierModel,
    fiber_curvature,
    harris_curvature,
    load_materials,
    phase_curvature,
    refractive_index,
    wavevector,
)
from .crystal import (
    CrystalSpec,
    FrequencyGrid,
    Tpsa,
    default_grid,
    delta_k,
    make_crystal,
    phase_phi,
    solve_K0,
    tpsa_closed_form,
    tpsa_numeric,
)
from .propagation import (
    FiberSpec,
    FilterSpec,
    TemporalProfile,
    apply_filters,
    apply_medium,
    coincidence_rate,
    fwhm,
    g2,
    spectral_width,
    ttpa,
)
from .scan import (
    ScanResult,
    refine_optimal_fiber_length,
    scan_chirp,
    scan_crystal_length,
    scan_fiber_length,
)

__version__ = "0.1.0"
