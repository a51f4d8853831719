import math

import numpy as np
import pytest

from biphoton import (
    FiberSpec,
    ScanResult,
    default_grid,
    fiber_curvature,
    harris_curvature,
    refine_optimal_fiber_length,
    scan_chirp,
    scan_crystal_length,
    scan_fiber_length,
)
from biphoton.errors import ConfigError
from biphoton.scan import (
    FIBER_RESOLUTION,
    FiberSweep,
    golden_section_minimize,
    heuristic_fiber_length,
    optimize_fiber,
)


@pytest.fixture(scope="module")
def sweep_b(crystal_factory, materials):
    crystal = crystal_factory(1.8, -50)
    return crystal, FiberSweep(crystal, materials)


def test_scan_result_validation():
    with pytest.raises(ValueError):
        ScanResult("x", [1.0], "y", [2.0], 1.0, 2.0)
    with pytest.raises(ValueError):
        ScanResult("x", [1.0, 2.0], "y", [2.0], 1.0, 2.0)


def test_golden_section_on_parabola():
    x, fx = golden_section_minimize(lambda t: (t - 0.37) ** 2 + 4.0, 0.0, 1.0, 1e-6)
    assert x == pytest.approx(0.37, abs=1e-6)
    assert fx == pytest.approx(4.0)


@pytest.mark.parametrize("l0", [0.23, 1.06, 1.91])
def test_refine_with_quadratic_toy_metric(crystal_factory, materials, l0):
    metric = lambda l: (l - l0) ** 2 + 1e-13  # noqa: E731
    lengths = np.linspace(0.0, 2.0, 41)
    scan = ScanResult("fiber_length_m", lengths, "correlation_time_s",
                      np.array([metric(l) for l in lengths]), 0.0, 0.0)
    opt = refine_optimal_fiber_length(scan, crystal_factory(0.8, -20), materials, metric=metric)
    assert abs(opt.length - l0) < FIBER_RESOLUTION
    assert not opt.at_boundary


def test_refine_flags_boundary_minimum(crystal_factory, materials):
    lengths = np.linspace(0.0, 2.0, 11)
    scan = ScanResult("fiber_length_m", lengths, "correlation_time_s", lengths + 1.0, 0.0, 1.0)
    opt = refine_optimal_fiber_length(scan, crystal_factory(0.8, -20), materials, metric=lambda l: l)
    assert opt.at_boundary and opt.length == 0.0 and opt.correlation_time == 1.0


def test_fiber_scan_needs_three_steps(crystal_factory, materials):
    with pytest.raises(ConfigError):
        scan_fiber_length(crystal_factory(0.8, -20), materials, n_steps=2)


def test_collapsed_range_returns_unfibered_time(crystal_factory, materials):
    crystal = crystal_factory(0.8, -20)
    sweep = FiberSweep(crystal, materials)
    scan = scan_fiber_length(crystal, materials, l_range=(0.0, 0.0), n_steps=3, sweep=sweep)
    assert np.all(scan.parameter_values == 0.0)
    assert np.all(scan.metric_values == sweep.correlation_time(0.0))


def test_sweep_matches_full_pipeline(sweep_b, materials):
    from biphoton import apply_medium, g2, ttpa

    crystal, sweep = sweep_b
    direct = g2(ttpa(apply_medium(sweep.tpsa, FiberSpec(materials.fiber, 0.9)))).fwhm
    assert sweep.correlation_time(0.9) == pytest.approx(direct, rel=1e-9)


def test_fiber_scan_endpoints_above_interior_minimum(sweep_b, materials):
    crystal, sweep = sweep_b
    l_h = heuristic_fiber_length(crystal, materials)
    scan = scan_fiber_length(crystal, materials, l_range=(0.0, 2.5 * l_h), n_steps=41, sweep=sweep)
    interior = scan.metric_values[1:-1].min()
    assert scan.metric_values[0] > interior and scan.metric_values[-1] > interior
    assert scan.min_metric == scan.metric_values.min()
    assert scan.argmin_value in scan.parameter_values


def test_heuristic_length_balances_curvatures(crystal_factory, materials):
    crystal = crystal_factory(1.8, -50)
    l_h = heuristic_fiber_length(crystal, materials)
    w0 = crystal.degenerate_signal_frequency
    ofp = fiber_curvature(FiberSpec(materials.fiber, l_h), w0, crystal.pump_frequency)
    assert ofp == pytest.approx(harris_curvature(crystal, materials, w0), rel=1e-12)


def test_heuristic_undefined_for_positive_chirp(crystal_factory, materials):
    assert math.isnan(heuristic_fiber_length(crystal_factory(0.8, 20), materials))


def test_fiber_scan_deterministic(crystal_factory, materials):
    crystal = crystal_factory(0.8, -50)
    grid = default_grid(crystal, materials, 8192)
    a = scan_fiber_length(crystal, materials, l_range=(0.0, 3.0), n_steps=7, grid=grid)
    b = scan_fiber_length(crystal, materials, l_range=(0.0, 3.0), n_steps=7, grid=grid)
    assert a.metric_values.tobytes() == b.metric_values.tobytes()


def test_optimize_fiber_interior_for_negative_chirp(crystal_factory, materials):
    crystal = crystal_factory(1.8, -100)
    scan, opt, sweep = optimize_fiber(crystal, materials, grid=default_grid(crystal, materials, 16384))
    assert not opt.at_boundary
    assert opt.correlation_time <= scan.min_metric
    assert opt.correlation_time >= sweep.fourier_limit() * (1 - 1e-6)


def test_crystal_length_scan_shapes(materials):
    res = scan_crystal_length(1e6, (0.008, 0.025), 3, materials, n_points=8192)
    assert res.parameter_values.size == 3 and res.metric_name == "correlation_time_s"
    pos = res.extra["correlation_time_positive_chirp_s"]
    assert np.all(np.diff(pos) > 0)
    assert np.all(res.metric_values < pos)
    assert np.all(res.extra["fiber_length_m"] > 0)
    with pytest.raises(ConfigError):
        scan_crystal_length(1e6, (0.008, 0.025), 1, materials)


def test_chirp_scan_widths_monotone(materials):
    res = scan_chirp(0.018, (2e5, 5e6), 6, materials, n_points=8192, with_compression=False)
    assert res.metric_name == "spectral_width_m"
    assert np.all(np.diff(res.metric_values) >= 0)
    assert res.extra == {}
    with pytest.raises(ConfigError):
        scan_chirp(0.018, (0.0, 5e6), 3, materials)


def test_chirp_scan_deterministic(materials):
    kw = dict(n_points=4096, with_compression=True)
    a = scan_chirp(0.008, (2e5, 1e6), 2, materials, **kw)
    b = scan_chirp(0.008, (2e5, 1e6), 2, materials, **kw)
    for key in a.extra:
        assert a.extra[key].tobytes() == b.extra[key].tobytes()
    assert a.metric_values.tobytes() == b.metric_values.tobytes()
