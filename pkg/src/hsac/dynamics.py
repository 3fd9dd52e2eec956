"""Three-degree-of-freedom point-mass aircraft model.

Ground frame with ``z`` pointing down, so altitude is ``h = -z``. The
controls are the attack angle ``alpha`` and bank angle ``mu``; throttle is
pinned at 1. Integration is explicit first-order Euler with the control
angles updated before the kinematic state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

G0 = 9.80665


def wrap_pi(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class AircraftParams:
    """Airframe, limit and integration constants.

    Mass, load factor, speed/height bands, control-rate limits, attack-angle
    band and thrust follow the UCAV table of the source study (thrust given
    there in kilogram-force). Aerodynamic coefficients are not published;
    the defaults give a level trim close to ``alpha = 0`` at 150 m/s and a
    level top speed just under ``v_max``.
    """

    m: float = 150.0
    g: float = G0
    t_max: float = 100.0 * G0
    rho: float = 1.225
    s_w: float = 0.5
    c_l0: float = 0.2
    c_l_alpha: float = 3.5
    c_d0: float = 0.02
    bdp: float = 0.15
    n_max: float = 10.0
    q_max: float | None = None  # None -> 0.5 * rho * v_max**2
    h_min: float = 2000.0
    h_max: float = 8000.0
    v_min: float = 80.0
    v_max: float = 400.0
    alpha_min: float = math.radians(-15.0)
    alpha_max: float = math.radians(15.0)
    d_alpha: float = math.radians(5.0)
    d_mu: float = math.radians(50.0)
    dt: float = 0.1

    def __post_init__(self) -> None:
        if self.q_max is None:
            object.__setattr__(self, "q_max", 0.5 * self.rho * self.v_max**2)
        for name in ("m", "g", "rho", "s_w", "dt", "t_max", "d_alpha", "d_mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"AircraftParams.{name} must be positive")
        if not self.n_max > 1:
            raise ValueError("AircraftParams.n_max must exceed 1")
        for lo, hi in (("h_min", "h_max"), ("v_min", "v_max"), ("alpha_min", "alpha_max")):
            if not getattr(self, lo) < getattr(self, hi):
                raise ValueError(f"AircraftParams band {lo} < {hi} violated")
        if not self.v_min > 0:
            raise ValueError("AircraftParams.v_min must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "AircraftParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown aircraft parameters: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class UcavState:
    x: float
    y: float
    z: float
    v: float
    gamma: float = 0.0
    chi: float = 0.0
    alpha: float = 0.0
    mu: float = 0.0
    eta: float = 1.0

    @property
    def h(self) -> float:
        return -self.z

    @property
    def position(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    @property
    def velocity(self) -> tuple[float, float, float]:
        cg = math.cos(self.gamma)
        return (
            self.v * cg * math.cos(self.chi),
            self.v * cg * math.sin(self.chi),
            -self.v * math.sin(self.gamma),
        )

    @classmethod
    def at_altitude(cls, x: float, y: float, h: float, v: float, chi: float = 0.0, **kw) -> "UcavState":
        return cls(x=x, y=y, z=-h, v=v, chi=chi, **kw)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


STATE_FIELDS: tuple[str, ...] = tuple(f.name for f in fields(UcavState))


@dataclass(frozen=True)
class StateDerivative:
    dx: float
    dy: float
    dz: float
    dv: float
    dgamma: float
    dchi: float


@dataclass(frozen=True)
class ControlRates:
    alpha_dot: float = 0.0
    mu_dot: float = 0.0


@dataclass(frozen=True)
class LimitStatus:
    overloaded: bool
    reasons: tuple[str, ...] = field(default_factory=tuple)


def lift_drag_coefficients(alpha: float, params: AircraftParams) -> tuple[float, float]:
    c_l = params.c_l0 + params.c_l_alpha * alpha
    c_d = params.c_d0 + params.bdp * c_l * c_l
    return c_l, c_d


def aero_forces(alpha: float, v: float, params: AircraftParams) -> tuple[float, float]:
    """Lift and drag in Newtons."""
    c_l, c_d = lift_drag_coefficients(alpha, params)
    qs = 0.5 * params.rho * v * v * params.s_w
    return qs * c_l, qs * c_d


def load_and_pressure(alpha: float, v: float, params: AircraftParams) -> tuple[float, float]:
    """Load factor (lift over weight) and dynamic pressure."""
    lift, _ = aero_forces(alpha, v, params)
    return lift / (params.m * params.g), 0.5 * params.rho * v * v


def state_derivative(state: UcavState, params: AircraftParams) -> StateDerivative:
    v, gamma, chi = state.v, state.gamma, state.chi
    lift, drag = aero_forces(state.alpha, v, params)
    thrust = state.eta * params.t_max
    m, g = params.m, params.g
    cg, sg = math.cos(gamma), math.sin(gamma)
    normal = thrust * math.sin(state.alpha) + lift
    return StateDerivative(
        dx=v * cg * math.cos(chi),
        dy=v * cg * math.sin(chi),
        dz=-v * sg,
        dv=(thrust * math.cos(state.alpha) - drag) / m - g * sg,
        dgamma=(normal * math.cos(state.mu) - m * g * cg) / (m * v),
        dchi=normal * math.sin(state.mu) / (m * v * cg),
    )


def clamp_rates(action: ControlRates, params: AircraftParams) -> ControlRates:
    return ControlRates(
        alpha_dot=min(max(action.alpha_dot, -params.d_alpha), params.d_alpha),
        mu_dot=min(max(action.mu_dot, -params.d_mu), params.d_mu),
    )


def step(state: UcavState, action: ControlRates, params: AircraftParams) -> UcavState:
    """Advance one Euler step: control angles first, then kinematics."""
    rates = clamp_rates(action, params)
    dt = params.dt
    alpha = min(max(state.alpha + rates.alpha_dot * dt, params.alpha_min), params.alpha_max)
    mu = wrap_pi(state.mu + rates.mu_dot * dt)
    controlled = replace(state, alpha=alpha, mu=mu, eta=1.0)
    d = state_derivative(controlled, params)
    gamma = min(max(state.gamma + d.dgamma * dt, -math.pi / 2), math.pi / 2)
    return UcavState(
        x=state.x + d.dx * dt,
        y=state.y + d.dy * dt,
        z=state.z + d.dz * dt,
        v=state.v + d.dv * dt,
        gamma=gamma,
        chi=wrap_pi(state.chi + d.dchi * dt),
        alpha=alpha,
        mu=mu,
        eta=1.0,
    )


def level_flight_step(state: UcavState, params: AircraftParams) -> UcavState:
    """Constant-velocity straight-and-level propagation (scripted target)."""
    dt = params.dt
    return replace(
        state,
        x=state.x + state.v * math.cos(state.chi) * dt,
        y=state.y + state.v * math.sin(state.chi) * dt,
        gamma=0.0,
        mu=0.0,
    )


def check_limits(state: UcavState, params: AircraftParams) -> LimitStatus:
    n, q_bar = load_and_pressure(state.alpha, state.v, params)
    reasons = []
    if n > params.n_max:
        reasons.append("load factor")
    if not params.h_min <= state.h <= params.h_max:
        reasons.append("altitude")
    if not params.v_min <= state.v <= params.v_max:
        reasons.append("speed")
    if q_bar > params.q_max:
        reasons.append("dynamic pressure")
    return LimitStatus(overloaded=bool(reasons), reasons=tuple(reasons))
