import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.constants import c

from biphoton import (
    FiberSpec,
    SellmeierModel,
    fiber_curvature,
    harris_curvature,
    load_materials,
    phase_curvature,
    refractive_index,
    wavevector,
)
from biphoton.crystal import delta_k, phase_phi
from biphoton.dispersion import (
    MaterialSet,
    default_materials_path,
    group_velocity_dispersion,
    load_model_library,
)
from biphoton.errors import ConfigError, DispersionDomainError, NumericError


def omega_of(lam):
    return 2 * np.pi * c / lam


def silica_by_hand(lam_um):
    # three-term form with resonance wavelengths (um), squared here
    terms = [(0.6961663, 0.0684043), (0.4079426, 0.1162414), (0.8974794, 9.896161)]
    n2 = 1.0 + sum(b * lam_um**2 / (lam_um**2 - lr**2) for b, lr in terms)
    return math.sqrt(n2)


def ktp_by_hand(lam_um, a, b, c_, d):
    # n^2 = A + B / (1 - C / l^2) - D l^2
    return math.sqrt(a + b / (1 - c_ / lam_um**2) - d * lam_um**2)


def test_fused_silica_matches_hand_evaluation(materials):
    for lam_um in (0.458, 0.916, 1.3, 1.55):
        n = refractive_index(materials.fiber, lam_um * 1e-6)
        assert n == pytest.approx(silica_by_hand(lam_um), rel=1e-8)
    # a familiar anchor: fused silica is about 1.4507 at 916 nm
    assert refractive_index(materials.fiber, 916e-9) == pytest.approx(1.4517, abs=2e-3)


def test_ktp_axes_match_hand_evaluation(materials):
    n_o = refractive_index(materials.ktp_ordinary, 458e-9)
    assert n_o == pytest.approx(ktp_by_hand(0.458, 2.19229, 0.83547, 0.04970, 0.01621), rel=1e-12)
    n_e = refractive_index(materials.ktp_extraordinary, 916e-9)
    assert n_e == pytest.approx(ktp_by_hand(0.916, 2.25411, 1.06543, 0.05486, 0.02140), rel=1e-12)
    assert n_e > refractive_index(materials.ktp_ordinary, 916e-9)


def test_wavevector_composition(materials):
    w = omega_of(916e-9)
    k = wavevector(materials.ktp_extraordinary, w)
    n = ktp_by_hand(0.916, 2.25411, 1.06543, 0.05486, 0.02140)
    assert k == pytest.approx(n * w / c, rel=1e-12)
    assert wavevector(materials.fiber, w) == pytest.approx(silica_by_hand(0.916) * w / c, rel=1e-8)


def test_doubling_index_doubles_wavevector(materials):
    m = materials.fiber
    # n^2 scales by 4 when A and every B scale by 4; the poles stay put
    coef = [4 * v if i == 0 or i % 2 == 1 else v for i, v in enumerate(m.coefficients)]
    doubled = SellmeierModel("x4", coef, m.formula_kind, m.validity_range)
    w = omega_of(1e-6)
    assert wavevector(doubled, w) == pytest.approx(2 * wavevector(m, w), rel=1e-12)


@pytest.mark.parametrize("lam", [0.3e-6, 1.7e-6])
def test_out_of_range_is_an_error_naming_model_and_bound(materials, lam):
    with pytest.raises(DispersionDomainError, match="ktp_ny_fan1987.*(0.4|1.6)"):
        refractive_index(materials.ktp_ordinary, lam)


def test_range_bounds_themselves_are_valid(materials):
    lo, hi = materials.ktp_ordinary.validity_range
    refractive_index(materials.ktp_ordinary, np.array([lo, hi]) * 1e-6)


def test_index_continuous_and_finite_over_range(materials):
    for model in (materials.ktp_ordinary, materials.ktp_extraordinary, materials.fiber):
        lam = np.linspace(*model.validity_range, 2000) * 1e-6
        n = refractive_index(model, lam)
        assert np.all(np.isfinite(n)) and np.all(n > 1)
        assert np.max(np.abs(np.diff(n))) < 5e-3


def test_wavevector_increases_with_frequency(materials):
    w = np.linspace(omega_of(1.6e-6), omega_of(0.4e-6), 4000)
    for model in (materials.ktp_ordinary, materials.ktp_extraordinary, materials.fiber):
        assert np.all(np.diff(wavevector(model, w)) > 0)


def test_model_rejects_wrong_coefficient_count():
    with pytest.raises(ConfigError, match="coefficients"):
        SellmeierModel("bad", (1.0, 0.5), "sellmeier", (0.4, 1.6))


def test_model_rejects_index_below_one():
    with pytest.raises(ConfigError, match="> 1"):
        SellmeierModel("thin", (0.5, 0.1, 0.01), "sellmeier", (0.4, 1.6))


def test_material_set_requires_full_window(materials):
    narrow = SellmeierModel("narrow", materials.fiber.coefficients, "sellmeier", (0.5, 1.6))
    with pytest.raises(ConfigError, match="narrow"):
        MaterialSet(materials.ktp_ordinary, materials.ktp_extraordinary, narrow)


def test_materials_file_unknown_key(tmp_path):
    path = tmp_path / "m.toml"
    path.write_text('[[model]]\nname="a"\nformula_kind="sellmeier"\ncoefficients=[1.0,1.0,0.01]\n'
                    'validity_range_um=[0.2,2.0]\ncolour="red"\n')
    with pytest.raises(ConfigError, match="colour"):
        load_model_library(path)


def test_materials_env_var(tmp_path, monkeypatch):
    text = default_materials_path().read_text()
    alt = tmp_path / "alt.toml"
    alt.write_text(text.replace('fiber = "fused_silica_malitson1965"', 'fiber = "ktp_nx_fan1987"'))
    monkeypatch.setenv("BIPHOTON_MATERIALS", str(alt))
    assert load_materials().fiber.name == "ktp_nx_fan1987"


def test_unknown_fiber_name():
    with pytest.raises(ConfigError, match="nonexistent"):
        load_materials(fiber="nonexistent")


@given(a=st.floats(-1e3, 1e3), b=st.floats(-1e3, 1e3), c0=st.floats(-1e3, 1e3),
       x=st.floats(1.0, 1e3))
def test_phase_curvature_exact_on_quadratics(a, b, c0, x):
    got = phase_curvature(lambda w: a * w**2 + b * w + c0, x, step=1e-3 * x)
    assert got == pytest.approx(2 * a, rel=1e-6, abs=1e-6 * (abs(a) + abs(b) / x + abs(c0) / x**2))


def test_phase_curvature_of_omega_squared_at_optical_scale():
    w0 = omega_of(916e-9)
    assert phase_curvature(lambda w: w**2, w0) == pytest.approx(2.0, rel=1e-6)


def test_phase_curvature_of_constant_is_zero():
    assert phase_curvature(lambda w: np.full_like(w, 7.0), 2e15) == pytest.approx(0.0, abs=1e-40)


def test_phase_curvature_nonfinite_samples():
    with pytest.raises(NumericError):
        phase_curvature(lambda w: np.where(w > 1.0, np.nan, 0.0), 1.0, step=0.1)


def test_harris_curvature_matches_chain_rule(crystal_factory, materials):
    """d2 phi = (L/2 + dk/(2 alpha)) dk'' + dk'^2/(2 alpha), with dk', dk'' by a separate stencil."""
    crystal = crystal_factory(0.8, -50)
    L, alpha = crystal.length, crystal.chirp_alpha
    w0 = crystal.degenerate_signal_frequency
    for w in (w0, w0 * 1.004):
        h = 3e-4 * w
        d = [delta_k(crystal, materials, w + j * h) for j in (-1, 0, 1)]
        dk1 = (d[2] - d[0]) / (2 * h)
        dk2 = (d[2] - 2 * d[1] + d[0]) / h**2
        expected = -((L / 2 + d[1] / (2 * alpha)) * dk2 + dk1**2 / (2 * alpha))
        assert harris_curvature(crystal, materials, w) == pytest.approx(expected, rel=1e-3)


def test_harris_sign_flips_with_chirp(crystal_factory, materials):
    neg, pos = crystal_factory(0.8, -20), crystal_factory(0.8, 20)
    w0 = neg.degenerate_signal_frequency
    hp_neg = harris_curvature(neg, materials, w0)
    hp_pos = harris_curvature(pos, materials, w0)
    assert hp_neg > 0 > hp_pos
    # at dk = 0 the linear term has no curvature contribution beyond L/2 dk''
    w_curv = phase_curvature(lambda w: delta_k(neg, materials, w), w0)
    linear = neg.length / 2 * w_curv
    assert -(hp_neg + linear) == pytest.approx(hp_pos + linear, rel=1e-6)


def test_harris_vectorized_agrees_with_scalar(crystal_factory, materials):
    crystal = crystal_factory(1.8, -50)
    w = crystal.degenerate_signal_frequency * np.array([0.99, 1.0, 1.01])
    vec = harris_curvature(crystal, materials, w)
    assert np.allclose(vec, [harris_curvature(crystal, materials, x) for x in w], rtol=1e-12)


def test_phase_phi_is_the_harris_phase(crystal_factory, materials):
    crystal = crystal_factory(0.8, -20)
    w0 = crystal.degenerate_signal_frequency
    direct = -phase_curvature(lambda w: phase_phi(crystal, delta_k(crystal, materials, w)), w0)
    assert harris_curvature(crystal, materials, w0) == direct


def test_fiber_curvature_zero_lengths(materials):
    fiber = FiberSpec(materials.fiber)
    assert fiber_curvature(fiber, 2e15, 4e15) == 0.0


@settings(max_examples=30, deadline=None)
@given(ls=st.floats(0.0, 20.0), li=st.floats(0.0, 20.0))
def test_fiber_curvature_linear_and_additive(materials, ls, li):
    wp = omega_of(458e-9)
    ws = omega_of(900e-9)
    both = fiber_curvature(FiberSpec(materials.fiber, ls, li), ws, wp)
    s = fiber_curvature(FiberSpec(materials.fiber, ls, 0.0), ws, wp)
    i = fiber_curvature(FiberSpec(materials.fiber, 0.0, li), ws, wp)
    assert both == pytest.approx(s + i, rel=1e-12, abs=1e-40)
    double = fiber_curvature(FiberSpec(materials.fiber, 2 * ls, 0.0), ws, wp)
    assert double == pytest.approx(2 * s, rel=1e-12, abs=1e-40)


def test_silica_gvd_at_916nm(materials):
    # normal dispersion, roughly 27 fs^2/mm near 900 nm
    gvd = group_velocity_dispersion(materials.fiber, omega_of(916e-9))
    assert 2.5e-26 < gvd < 3.0e-26


def test_fiber_curvature_shares_sign_with_negative_chirp_harris(crystal_factory, materials):
    crystal = crystal_factory(0.8, -20)
    w0 = crystal.degenerate_signal_frequency
    ofp = fiber_curvature(FiberSpec(materials.fiber, 1.06, 0.0), w0, crystal.pump_frequency)
    assert ofp > 0 and harris_curvature(crystal, materials, w0) > 0
