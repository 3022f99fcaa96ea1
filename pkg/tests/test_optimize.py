import numpy as np
import pytest

from wakeforge.errors import ConfigError, LayoutError
from wakeforge.optimize import (OptConfig, heatmap, optimize_layout,
                                optimize_yaw, yaw_grid_oracle)
from wakeforge.pipelines import farm_power, reference_evaluator
from wakeforge.turbine import FarmLayout

# single-start for cheap smoke cases; the default multi-start escapes the
# zero-yaw saddle in waked pairs
FAST = OptConfig(maxiter=30, yaw_starts=(0.0,), penalty_rounds=3)
FAST_MULTI = OptConfig(maxiter=30, penalty_rounds=3)


@pytest.fixture(scope="module")
def evaluator():
    from wakeforge.turbine import default_turbine_spec
    return reference_evaluator(default_turbine_spec(), tile_shape=(48, 48))


def pair_layout(spec, gap=5.0):
    d0 = spec.rotor_diameter
    return FarmLayout([[0.0, 0.0], [gap * d0, 0.0]], [0.0, 0.0], spec)


def test_yaw_grid_oracle_errors(spec, evaluator):
    solo = FarmLayout([[0.0, 0.0]], [0.0], spec)
    with pytest.raises(ConfigError):
        yaw_grid_oracle(solo, (8.0, 0.06), 5.0, evaluator)
    with pytest.raises(ConfigError):
        yaw_grid_oracle(pair_layout(spec), (8.0, 0.06), 3.3, evaluator)


def test_yaw_grid_oracle_surface(spec, evaluator):
    layout = pair_layout(spec)
    yaws, surface = yaw_grid_oracle(layout, (8.0, 0.06), 35.0, evaluator)
    assert np.array_equal(yaws, [-35.0, 0.0, 35.0])
    assert surface.shape == (3, 3)
    mid = farm_power(layout, [0.0, 0.0], (8.0, 0.06), evaluator)
    assert surface[1, 1] == pytest.approx(mid, rel=1e-12)
    # flipping the front yaw mirrors the wake; back turbine on the centerline
    # sees the same deficit, and its own power is even in yaw
    assert surface[0, 1] == pytest.approx(surface[2, 1], rel=1e-9)


def test_single_turbine_optimal_yaw_near_zero(spec, evaluator):
    layout = FarmLayout([[0.0, 0.0]], [20.0], spec)
    res = optimize_yaw(layout, (8.0, 0.06), evaluator, FAST)
    assert abs(res.variables[0]) < 1.0
    assert res.optimized_power > res.initial_power
    assert res.gain_percent == pytest.approx(
        (res.optimized_power - res.initial_power) / res.initial_power * 100.0)
    assert res.evaluator_tag == "reference-gaussian"
    assert res.evaluations > 0 and res.wall_time > 0.0


def test_two_turbine_yaw_steering_gains(spec, evaluator):
    layout = pair_layout(spec, gap=4.0)
    res = optimize_yaw(layout, (8.0, 0.06), evaluator, FAST_MULTI)
    assert np.all(np.abs(res.variables) <= 35.0 + 1e-9)
    # waked pair: steering the front turbine must beat greedy zero yaw
    assert res.gain_percent > 0.5
    assert abs(res.variables[0]) > 5.0   # front turbine actually steers
    assert abs(res.variables[1]) < 10.0  # back turbine stays near greedy


def test_layout_optimization_improves_tight_pair(spec, evaluator):
    d0 = spec.rotor_diameter
    layout = pair_layout(spec, gap=3.0)
    box = ((-2 * d0, 5 * d0), (-3 * d0, 3 * d0))
    res = optimize_layout(layout, box, (8.0, 0.06), evaluator, FAST)
    assert res.optimized_power >= res.initial_power
    assert res.gain_percent > 0.5
    pos = res.variables
    assert np.all(pos[:, 0] >= -2 * d0 - 1e-9)
    assert np.all(pos[:, 0] <= 5 * d0 + 1e-9)
    final = layout.with_positions(pos)
    assert final.spacing_violations() < 1e-3 * d0


def test_layout_rejects_bad_starts(spec, evaluator):
    d0 = spec.rotor_diameter
    tight = FarmLayout([[0.0, 0.0], [100.0, 0.0]], [0.0, 0.0], spec,
                       min_spacing=2 * d0)
    box = ((-d0, 5 * d0), (-d0, d0))
    with pytest.raises(LayoutError):
        optimize_layout(tight, box, (8.0, 0.06), evaluator, FAST)
    outside = pair_layout(spec)
    with pytest.raises(LayoutError):
        optimize_layout(outside, ((0.0, d0), (0.0, d0)), (8.0, 0.06),
                        evaluator, FAST)


def test_heatmap_single_cell(spec, evaluator):
    layout = pair_layout(spec, gap=4.0)
    res = heatmap(layout, [0.06], [8.0], "yaw", evaluator, FAST_MULTI)
    assert res.gains.shape == (1, 1)
    assert np.isfinite(res.gains[0, 0])
    assert res.gains[0, 0] > 0.0
    assert res.times[0, 0] > 0.0
    assert res.mean_time == pytest.approx(res.times[0, 0])
    assert res.failures == []
    with pytest.raises(ConfigError):
        heatmap(layout, [], [8.0], "yaw", evaluator, FAST)
    with pytest.raises(ConfigError):
        heatmap(layout, [0.06], [8.0], "pitch", evaluator, FAST)
