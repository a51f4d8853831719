import numpy as np
import pytest

from biphoton import FrequencyGrid, default_grid, load_materials, make_crystal
from biphoton.crystal import tpsa_closed_form

CM = 1e-2
PER_CM2 = 1e4

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def materials():
    return load_materials()


@pytest.fixture(scope="session")
def crystal_factory(materials):
    cache = {}

    def build(length_cm, alpha_cm2):
        key = (length_cm, alpha_cm2)
        if key not in cache:
            cache[key] = make_crystal(materials, length_cm * CM, alpha_cm2 * PER_CM2)
        return cache[key]

    return build


def band_grid(crystal, materials, n_points=256, level=1e-3, margin=1.2):
    """Grid covering the band where |F| exceeds ``level`` of its peak, plus a margin."""
    g = default_grid(crystal, materials, on_edge="ignore")
    amp = np.abs(tpsa_closed_form(crystal, materials, g).amplitudes)
    w = g.omega[amp > level * amp.max()]
    half = min(margin * np.max(np.abs(w - g.center)), g.span / 2)
    return FrequencyGrid(g.center, 2 * half, n_points)


@pytest.fixture(scope="session")
def oracle_grid(materials):
    return lambda crystal, n_points=256: band_grid(crystal, materials, n_points)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
