import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hsac import dynamics as dyn
from hsac.dynamics import AircraftParams, ControlRates, UcavState

from .conftest import random_state
from .oracles import euler_step_oracle, state_derivative_oracle


def test_coefficients_zero_alpha(params):
    c_l, c_d = dyn.lift_drag_coefficients(0.0, params)
    assert c_l == params.c_l0
    assert c_d == params.c_d0 + params.bdp * params.c_l0**2


def test_coefficients_flat_lift_slope():
    p = AircraftParams(c_l_alpha=0.0)
    assert dyn.lift_drag_coefficients(0.2, p)[0] == p.c_l0


def test_coefficients_hand_values():
    p = AircraftParams(c_l0=0.2, c_l_alpha=3.5, c_d0=0.02, bdp=0.05)
    c_l, c_d = dyn.lift_drag_coefficients(0.1, p)
    assert c_l == pytest.approx(0.55, abs=1e-15)
    assert c_d == pytest.approx(0.035125, abs=1e-15)
    assert round(c_d, 4) == 0.0351


def test_zero_lift_coefficient():
    alpha0 = -AircraftParams().c_l0 / AircraftParams().c_l_alpha
    lift, _ = dyn.aero_forces(alpha0, 100.0, AircraftParams())
    assert lift == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-0.25, 0.25), st.floats(80, 400))
def test_forces_scale_with_v_squared(alpha, v):
    p = AircraftParams()
    l1, d1 = dyn.aero_forces(alpha, v, p)
    l2, d2 = dyn.aero_forces(alpha, 2 * v, p)
    assert l2 == pytest.approx(4 * l1, rel=1e-12, abs=1e-9)
    assert d2 == pytest.approx(4 * d1, rel=1e-12)


def test_forces_match_single_expression(params):
    alpha, v = 0.05, 150.0
    lift, drag = dyn.aero_forces(alpha, v, params)
    c_l = 0.2 + 3.5 * 0.05
    exp_l = 0.5 * 1.225 * 150.0**2 * 0.5 * c_l
    exp_d = 0.5 * 1.225 * 150.0**2 * 0.5 * (0.02 + 0.15 * c_l**2)
    assert lift == pytest.approx(exp_l, rel=1e-12)
    assert drag == pytest.approx(exp_d, rel=1e-12)


def test_unit_load_factor(params):
    # alpha where lift equals weight at 150 m/s
    v = 150.0
    c_l = params.m * params.g / (0.5 * params.rho * v * v * params.s_w)
    alpha = (c_l - params.c_l0) / params.c_l_alpha
    n, _ = dyn.load_and_pressure(alpha, v, params)
    assert n == pytest.approx(1.0, rel=1e-12)


def test_dynamic_pressure_hand_value(params):
    assert dyn.load_and_pressure(0.0, 100.0, params)[1] == pytest.approx(6125.0, rel=1e-15)


def test_load_factor_linear_in_wing_area():
    n1, _ = dyn.load_and_pressure(0.05, 200.0, AircraftParams(s_w=0.5))
    n2, _ = dyn.load_and_pressure(0.05, 200.0, AircraftParams(s_w=1.5))
    assert n2 == pytest.approx(3 * n1, rel=1e-12)


def test_level_axis_kinematics(params):
    d = dyn.state_derivative(UcavState(0, 0, -5000, 100.0), params)
    assert (d.dx, d.dy, d.dz) == (100.0, 0.0, 0.0)


def test_vertical_climb_kinematics(params):
    d = dyn.state_derivative(UcavState(0, 0, -5000, 100.0, gamma=math.pi / 2), params)
    assert d.dz == pytest.approx(-100.0, rel=1e-15)
    assert d.dx == pytest.approx(0.0, abs=1e-12)
    assert d.dy == pytest.approx(0.0, abs=1e-12)


def test_derivative_matches_oracle_generic(params, rng):
    for _ in range(200):
        s = random_state(rng, params)
        got = dyn.state_derivative(s, params)
        exp = state_derivative_oracle(s.as_tuple(), params)
        got_t = (got.dx, got.dy, got.dz, got.dv, got.dgamma, got.dchi)
        np.testing.assert_allclose(got_t, exp, rtol=1e-12, atol=1e-12)


def test_zero_action_level_step_advances_15m():
    p = AircraftParams(dt=0.1)
    s1 = dyn.step(UcavState(0, 0, -5000, 150.0), ControlRates(), p)
    assert s1.x == 15.0
    assert s1.y == 0.0
    assert s1.z == -5000.0


def test_rate_clamp_boundary(params):
    s = UcavState(0, 0, -5000, 150.0)
    s1 = dyn.step(s, ControlRates(2 * params.d_alpha, 0.0), params)
    assert s1.alpha == params.d_alpha * params.dt


def test_adversarial_stream_keeps_controls_in_bounds(params, rng):
    s = UcavState(0, 0, -5000, 150.0)
    for _ in range(10_000):
        a = ControlRates(*rng.choice([-1e3, -1.0, 0.0, 1.0, 1e3], size=2))
        prev = s
        s = dyn.step(s, a, params)
        assert params.alpha_min <= s.alpha <= params.alpha_max
        assert -math.pi <= s.mu <= math.pi
        assert abs(s.alpha - prev.alpha) <= params.d_alpha * params.dt + 1e-15
        dmu = dyn.wrap_pi(s.mu - prev.mu)
        assert abs(dmu) <= params.d_mu * params.dt + 1e-12
        assert -math.pi / 2 <= s.gamma <= math.pi / 2
        assert -math.pi < s.chi <= math.pi
        if not 50.0 < s.v < 1000.0:
            # far outside the envelope; restart the kinematics, keep the controls
            s = UcavState(0, 0, -5000, 150.0, alpha=s.alpha, mu=s.mu)


def test_step_matches_oracle(params, rng):
    for _ in range(200):
        s = random_state(rng, params)
        a = ControlRates(*rng.uniform(-0.2, 0.2, 2))
        got = dyn.step(s, a, params).as_tuple()
        exp = euler_step_oracle(s.as_tuple(), (a.alpha_dot, a.mu_dot), params)
        np.testing.assert_allclose(got, exp, rtol=1e-12, atol=1e-9)


def test_step_is_deterministic(params, rng):
    s = random_state(rng, params)
    a = ControlRates(0.01, -0.3)
    assert dyn.step(s, a, params) == dyn.step(s, a, params)


def test_balanced_level_flight_is_linear():
    # thrust and gravity cancelled artificially: massless-drag, lift = weight
    p = AircraftParams(c_d0=0.0, bdp=0.0, t_max=1e-300, c_l_alpha=0.0)
    v = 150.0
    c_l = p.m * p.g / (0.5 * p.rho * v * v * p.s_w)
    p = AircraftParams(c_d0=0.0, bdp=0.0, t_max=1e-300, c_l_alpha=0.0, c_l0=c_l)
    s = UcavState(0.0, 0.0, -5000.0, v, chi=0.3)
    for k in range(1, 101):
        s = dyn.step(s, ControlRates(), p)
        assert s.v == pytest.approx(v, rel=1e-12)
        assert s.gamma == pytest.approx(0.0, abs=1e-12)
    assert s.x == pytest.approx(100 * v * p.dt * math.cos(0.3), rel=1e-12)
    assert s.y == pytest.approx(100 * v * p.dt * math.sin(0.3), rel=1e-12)


@given(st.one_of(st.just(0.0), st.floats(1e-6, 1.5), st.floats(-1.5, -1e-6)), st.floats(80, 400))
def test_altitude_rises_iff_climbing(gamma, v):
    p = AircraftParams()
    s = UcavState(0, 0, -5000, v, gamma=gamma)
    s1 = dyn.step(s, ControlRates(), p)
    if gamma > 0:
        assert s1.h > s.h
    elif gamma < 0:
        assert s1.h < s.h
    else:
        assert s1.h == s.h


def test_limits_speed(params):
    st_ = dyn.check_limits(UcavState(0, 0, -5000, 450.0), params)
    assert st_.overloaded and "speed" in st_.reasons


def test_limits_nominal(params):
    assert not dyn.check_limits(UcavState(0, 0, -5000, 150.0, alpha=0.01), params).overloaded


def test_limits_load_factor(params):
    v = 300.0
    c_l = params.n_max * params.m * params.g / (0.5 * params.rho * v * v * params.s_w)
    alpha = (c_l - params.c_l0) / params.c_l_alpha
    over = dyn.check_limits(UcavState(0, 0, -5000, v, alpha=alpha * (1 + 1e-9)), params)
    under = dyn.check_limits(UcavState(0, 0, -5000, v, alpha=alpha * (1 - 1e-9)), params)
    assert over.reasons == ("load factor",)
    assert not under.overloaded


def test_limits_altitude_and_pressure():
    p = AircraftParams(q_max=10_000.0)
    st_ = dyn.check_limits(UcavState(0, 0, -1000, 150.0), p)
    assert st_.reasons == ("altitude", "dynamic pressure")


def test_params_validation():
    with pytest.raises(ValueError):
        AircraftParams(h_min=9000.0)
    with pytest.raises(ValueError):
        AircraftParams(n_max=1.0)
    with pytest.raises(ValueError):
        AircraftParams.from_dict({"wingspan": 3.0})
    p = AircraftParams.from_dict({"m": 200.0})
    assert AircraftParams.from_dict(p.to_dict()) == p


def test_thrust_is_kilogram_force(params):
    assert params.t_max == pytest.approx(100 * 9.80665)


@given(st.floats(-50, 50, allow_nan=False))
def test_wrap_pi_range(a):
    w = dyn.wrap_pi(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)
