import math

import numpy as np
import pytest

from wakeforge.errors import ConfigError, DomainError, LayoutError
from wakeforge.turbine import (DATASET_RANGES, DEFAULT_TI_CONSTANTS, FarmLayout,
                               TurbineSpec, axial_induction, case_layout,
                               interp_cp, interp_ct, local_ti_added,
                               local_ti_oracle, parse_layout,
                               parse_turbine_spec, turbine_power)


def test_default_spec_values(spec):
    assert spec.rotor_diameter == 126.0
    assert spec.hub_height == 90.0
    assert spec.rated_power == 5.0e6
    assert spec.cut_in_speed == 3.0
    assert spec.cut_out_speed == 25.0


def test_spec_invariants_rejected():
    table = ((5.0, 0.8), (10.0, 0.6))
    cp = ((5.0, 0.45), (10.0, 0.4))
    with pytest.raises(ConfigError):
        TurbineSpec(-1.0, 90.0, 5e6, 3.0, 25.0, table, cp)
    with pytest.raises(ConfigError):
        TurbineSpec(126.0, 50.0, 5e6, 3.0, 25.0, table, cp)  # rotor hits ground
    with pytest.raises(ConfigError):
        TurbineSpec(126.0, 90.0, 5e6, 25.0, 3.0, table, cp)
    with pytest.raises(ConfigError):
        TurbineSpec(126.0, 90.0, 5e6, 3.0, 25.0, ((5.0, 1.2),), cp)
    with pytest.raises(ConfigError):
        TurbineSpec(126.0, 90.0, 5e6, 3.0, 25.0, table, ((5.0, 0.7),))
    with pytest.raises(ConfigError):
        TurbineSpec(126.0, 90.0, 5e6, 3.0, 25.0,
                    ((10.0, 0.8), (5.0, 0.6)), cp)


def test_interp_ct_node_identity(spec):
    for u, ct in spec.ct_table:
        assert interp_ct(spec, u) == pytest.approx(ct, abs=0.0)


def test_interp_ct_midpoint_mean(spec):
    (u0, c0), (u1, c1) = spec.ct_table[3], spec.ct_table[4]
    assert interp_ct(spec, (u0 + u1) / 2) == pytest.approx((c0 + c1) / 2)


def test_interp_clamping(spec):
    assert interp_ct(spec, 0.5) == spec.ct_table[0][1]
    assert interp_ct(spec, 99.0) == spec.ct_table[-1][1]
    assert interp_cp(spec, 0.5) == spec.cp_table[0][1]
    with pytest.raises(DomainError):
        interp_ct(spec, -1.0)


def test_interp_ct_continuous_monotone_between_nodes(spec):
    speeds = np.linspace(spec.ct_table[0][0], spec.ct_table[-1][0], 400)
    vals = interp_ct(spec, speeds)
    assert np.all(np.isfinite(vals))
    # piecewise linearity: exact midpoint reproduction on each segment
    for (ua, ca), (ub, cb) in zip(spec.ct_table, spec.ct_table[1:]):
        assert interp_ct(spec, (ua + ub) / 2) == pytest.approx((ca + cb) / 2)


def test_power_cut_in_out(spec):
    assert turbine_power(spec, 2.9) == 0.0
    assert turbine_power(spec, 25.0) == 0.0
    assert turbine_power(spec, 26.0) == 0.0
    assert turbine_power(spec, 3.0) > 0.0


def test_power_yaw_zero_factor(spec):
    # yaw = 0 leaves the cosine factor at exactly 1
    assert turbine_power(spec, 8.0, 0.0) == turbine_power(spec, 8.0)


def test_power_hand_evaluation(spec):
    # independent scalar evaluation of 1/2 rho A Cp u^3 cos(yaw)^pP
    u, yaw = 8.0, 20.0
    cp = interp_cp(spec, u)
    expected = (0.5 * spec.rho * math.pi * spec.rotor_diameter ** 2 / 4.0
                * cp * u ** 3 * math.cos(math.radians(yaw)) ** 1.88)
    assert turbine_power(spec, u, yaw) == pytest.approx(expected, rel=1e-12)


def test_power_even_in_yaw_and_monotone(spec):
    assert turbine_power(spec, 9.0, 17.0) == turbine_power(spec, 9.0, -17.0)
    speeds = np.linspace(3.0, 11.0, 50)
    powers = [turbine_power(spec, u) for u in speeds]
    assert all(b >= a for a, b in zip(powers, powers[1:]))


def test_power_rated_clamp(spec):
    assert turbine_power(spec, 14.0) <= spec.rated_power
    assert turbine_power(spec, 15.0) == spec.rated_power
    assert turbine_power(spec, 20.0) == spec.rated_power


def test_axial_induction():
    assert axial_induction(0.0) == 0.0
    assert axial_induction(0.8) == pytest.approx(0.5 * (1 - math.sqrt(0.2)))
    with pytest.raises(DomainError):
        axial_induction(1.5)


def test_local_ti_hand_evaluation():
    # ti = 0.06, ct = 0.8, x = 5 d0 with the default constants
    c1, c2, c3, c4 = DEFAULT_TI_CONSTANTS
    a = 0.5 * (1 - math.sqrt(1 - 0.8))
    ti_add = c1 * a ** c2 * 0.06 ** c3 * 5.0 ** c4
    expected = math.sqrt(0.06 ** 2 + ti_add ** 2)
    assert local_ti_oracle(0.06, 0.8, 5 * 126.0, 126.0) == pytest.approx(
        expected, rel=1e-12)


def test_local_ti_properties():
    assert local_ti_oracle(0.08, 1e-9, 500.0, 126.0) == pytest.approx(0.08,
                                                                      rel=1e-3)
    assert local_ti_oracle(0.08, 0.7, 500.0, 126.0) >= 0.08
    near = local_ti_added(0.08, 0.7, 300.0, 126.0)
    far = local_ti_added(0.08, 0.7, 900.0, 126.0)
    assert far < near
    with pytest.raises(DomainError):
        local_ti_added(0.08, 0.7, -5.0, 126.0)


def test_conditions_ranges():
    (u_lo, u_hi), (ti_lo, ti_hi), (y_lo, y_hi) = DATASET_RANGES
    assert (u_lo, u_hi) == (3.0, 15.0)
    assert (ti_lo, ti_hi) == (0.01, 0.2)
    assert (y_lo, y_hi) == (-35.0, 35.0)


def test_spec_text_round_trip(spec):
    rows_ct = "\n".join(f"{u} {c}" for u, c in spec.ct_table)
    rows_cp = "\n".join(f"{u} {c}" for u, c in spec.cp_table)
    text = (f"rotor_diameter = {spec.rotor_diameter}\n"
            f"hub_height = {spec.hub_height}\n"
            f"rated_power = {spec.rated_power}\n"
            f"cut_in = {spec.cut_in_speed}\ncut_out = {spec.cut_out_speed}\n"
            f"rho = {spec.rho}\n"
            f"yaw_power_exponent = {spec.yaw_power_exponent}\n"
            f"ct:\n{rows_ct}\ncp:\n{rows_cp}\n")
    again = parse_turbine_spec(text)
    assert again == spec


def test_spec_parse_errors():
    with pytest.raises(ConfigError):
        parse_turbine_spec("bogus_key = 1\n")
    with pytest.raises(ConfigError):
        parse_turbine_spec("rotor_diameter = 126\n")  # missing keys


def test_layout_parse_and_spacing(spec):
    text = "min_spacing = 252\n0 0 10\n630 0\n"
    layout = parse_layout(text, spec)
    assert layout.n_turbines == 2
    assert layout.yaws[0] == 10.0 and layout.yaws[1] == 0.0
    assert layout.spacing_violations() == 0.0
    tight = FarmLayout([[0, 0], [100, 0]], [0, 0], spec, min_spacing=252.0)
    assert tight.spacing_violations() == pytest.approx(152.0)
    with pytest.raises(LayoutError):
        tight.check_spacing()


def test_layout_invariants(spec):
    with pytest.raises(LayoutError):
        FarmLayout(np.zeros((0, 2)), [], spec)
    with pytest.raises(LayoutError):
        FarmLayout([[0, 0], [1, 1]], [0.0], spec)


def test_case_layouts(spec):
    a = case_layout("a", spec)
    b = case_layout("b", spec)
    assert a.n_turbines == 6
    assert b.n_turbines == 15
    assert a.spacing_violations() == 0.0
    assert b.spacing_violations() == 0.0
    with pytest.raises(ConfigError):
        case_layout("z", spec)
