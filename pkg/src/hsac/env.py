"""One-on-one engagement environment with sparse, shaping and homotopy rewards."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields

import numpy as np

from . import dynamics as dyn
from .dynamics import AircraftParams, ControlRates, UcavState
from .geometry import RelativeGeometry, observation_from, relative_geometry

FIRING_HALF_ANGLE = math.radians(60.0)


class InvalidScenario(ValueError):
    pass


class EpisodeFinished(RuntimeError):
    pass


class DomainError(ValueError):
    pass


class CombatOutcome(enum.Enum):
    OVERLOADED = "overloaded"
    KILLED = "killed"
    WIN = "win"
    SURVIVAL = "survival"


@dataclass(frozen=True)
class RewardConfig:
    r1: float = 10.0
    r2: float = 5.0
    r3: float = -10.0
    r4: float = -0.01
    q_weight: tuple[float, float, float, float] = (1.0, 1.0, 1.0, 1.0)
    k: float = 1.0
    d_min: float = 200.0
    d_max: float = 3000.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "q_weight", tuple(float(w) for w in self.q_weight))
        if len(self.q_weight) != 4 or min(self.q_weight) <= 0:
            raise ValueError("q_weight must hold four positive diagonal entries")
        if not (self.r1 >= self.r2 > 0 > self.r4 > self.r3):
            raise ValueError("rewards must satisfy r1 >= r2 > 0 > r4 > r3")
        if not self.k > 0:
            raise ValueError("k must be positive")
        if not 0 < self.d_min < self.d_max:
            raise ValueError("need 0 < d_min < d_max")

    @classmethod
    def from_dict(cls, data: dict) -> "RewardConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["q_weight"] = list(self.q_weight)
        return d


@dataclass(frozen=True)
class InitialState:
    """Initial conditions; altitude ``h`` in meters, angles in degrees."""

    x: float = 0.0
    y: float = 0.0
    h: float = 5000.0
    v: float = 150.0
    chi_deg: float = 0.0
    gamma_deg: float = 0.0
    mu_deg: float = 0.0

    def to_state(self) -> UcavState:
        return UcavState(
            x=self.x,
            y=self.y,
            z=-self.h,
            v=self.v,
            gamma=math.radians(self.gamma_deg),
            chi=dyn.wrap_pi(math.radians(self.chi_deg)),
            alpha=0.0,
            mu=math.radians(self.mu_deg),
            eta=1.0,
        )


# Four typical starts for the attack-horizontal-flight evaluation (blue, red).
TABLE4_STARTS: dict[str, tuple[InitialState, InitialState]] = {
    "advantageous": (InitialState(0, 0, 5000, 150, 45), InitialState(5000, 5000, 5000, 150, 45)),
    "disadvantageous": (InitialState(0, 0, 5000, 150, -45), InitialState(-5000, 5000, 5000, 150, -45)),
    "head-on": (InitialState(0, 0, 5000, 150, 45), InitialState(5000, 5000, 5000, 150, -135)),
    "neutral": (InitialState(0, 0, 5000, 150, 45), InitialState(5000, -5000, 5000, 150, -135)),
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Episode initialization.

    ``red_mode`` is ``"fixed"`` (use ``red``) or ``"random_annulus"``: red is
    placed at a line-of-sight distance drawn from ``distance_band``, a
    relative height from ``height_band`` and a bearing from ``bearing_band_deg``
    around blue, with heading uniform on (-180, 180].
    ``red_controller`` is ``"policy"`` or ``"horizontal"``.
    """

    blue: InitialState = InitialState()
    red: InitialState = InitialState(5000.0, 0.0, 5000.0, 150.0, 0.0)
    red_mode: str = "random_annulus"
    distance_band: tuple[float, float] = (4000.0, 6000.0)
    height_band: tuple[float, float] = (-1000.0, 1000.0)
    bearing_band_deg: tuple[float, float] = (-180.0, 180.0)
    red_controller: str = "horizontal"
    max_steps: int = 500
    d_norm: float = 10_000.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("blue", "red"):
            val = getattr(self, name)
            if isinstance(val, dict):
                object.__setattr__(self, name, InitialState(**val))
        for name in ("distance_band", "height_band", "bearing_band_deg"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if self.red_mode not in ("fixed", "random_annulus"):
            raise InvalidScenario(f"unknown red_mode {self.red_mode!r}")
        if self.red_controller not in ("policy", "horizontal"):
            raise InvalidScenario(f"unknown red_controller {self.red_controller!r}")
        lo, hi = self.distance_band
        if not 0 < lo <= hi:
            raise InvalidScenario("distance band must lie in (0, inf)")
        hlo, hhi = self.height_band
        if hlo > hhi or max(abs(hlo), abs(hhi)) >= lo:
            raise InvalidScenario("height band must be ordered and inside the distance band")
        if self.bearing_band_deg[0] > self.bearing_band_deg[1]:
            raise InvalidScenario("bearing band must be ordered")
        if self.max_steps < 1:
            raise InvalidScenario("episode cap must be >= 1")
        if not self.d_norm > 0:
            raise InvalidScenario("d_norm must be positive")
        if self.seed < 0:
            raise InvalidScenario("seed must be unsigned")

    @classmethod
    def table4(cls, name: str, **kw) -> "ScenarioConfig":
        blue, red = TABLE4_STARTS[name]
        return cls(blue=blue, red=red, red_mode="fixed", **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        preset = data.pop("preset", None)
        if preset is not None:
            return cls.table4(preset, **data)
        return cls(**data)

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, InitialState):
                val = {g.name: getattr(val, g.name) for g in fields(val)}
            elif isinstance(val, tuple):
                val = list(val)
            d[f.name] = val
        return d

    def mirrored(self) -> "ScenarioConfig":
        """Swap blue and red initial states (fixed mode only)."""
        if self.red_mode != "fixed":
            raise InvalidScenario("only fixed scenarios can be mirrored")
        return ScenarioConfig(**{**self.__dict__, "blue": self.red, "red": self.blue})


def sample_red(scenario: ScenarioConfig, blue: UcavState, rng: np.random.Generator) -> UcavState:
    if scenario.red_mode == "fixed":
        return scenario.red.to_state()
    d = rng.uniform(*scenario.distance_band)
    dh = rng.uniform(*scenario.height_band)
    bearing = blue.chi + math.radians(rng.uniform(*scenario.bearing_band_deg))
    heading = rng.uniform(-math.pi, math.pi)
    horiz = math.sqrt(d * d - dh * dh)
    return UcavState(
        x=blue.x + horiz * math.cos(bearing),
        y=blue.y + horiz * math.sin(bearing),
        z=blue.z - dh,
        v=blue.v,
        gamma=0.0,
        chi=dyn.wrap_pi(heading),
        alpha=0.0,
        mu=0.0,
        eta=1.0,
    )


def in_firing_envelope(geo: RelativeGeometry, cfg: RewardConfig) -> bool:
    return (
        abs(geo.aa) < FIRING_HALF_ANGLE
        and abs(geo.ata) < FIRING_HALF_ANGLE
        and cfg.d_min <= geo.d_los <= cfg.d_max
    )


def classify(
    own: UcavState,
    opp: UcavState,
    geo_own: RelativeGeometry,
    geo_opp: RelativeGeometry,
    params: AircraftParams,
    cfg: RewardConfig,
) -> CombatOutcome:
    """Outcome for ``own``; ``geo_opp`` is the geometry seen from ``opp``."""
    if dyn.check_limits(own, params).overloaded:
        return CombatOutcome.OVERLOADED
    if in_firing_envelope(geo_opp, cfg):
        return CombatOutcome.KILLED
    if in_firing_envelope(geo_own, cfg):
        return CombatOutcome.WIN
    return CombatOutcome.SURVIVAL


def sparse_reward(c_own: CombatOutcome, c_opp: CombatOutcome, cfg: RewardConfig) -> float:
    if c_own is CombatOutcome.WIN:
        return cfg.r1
    if c_own in (CombatOutcome.OVERLOADED, CombatOutcome.KILLED):
        return cfg.r3
    if c_opp is CombatOutcome.OVERLOADED:
        return cfg.r2
    return cfg.r4


def extra_reward(geo: RelativeGeometry, cfg: RewardConfig) -> float:
    """Dense angle/distance shaping; never positive."""
    penalty = sum(w * a * a for w, a in zip(cfg.q_weight, geo.phi))
    if geo.d_los > cfg.d_max:
        return -penalty
    ratio = 2.0 * geo.d_los / (cfg.d_max + cfg.d_min) - 1.0
    return -penalty - cfg.k * (ratio * ratio + 1.0)


def homotopy_reward(r: float, r_extra: float, q: float) -> float:
    """Blend: ``q = 1`` is the fully shaped task, ``q = 0`` the sparse one."""
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"blend weight {q} outside [0, 1]")
    return q * (r + r_extra) + (1.0 - q) * r


@dataclass(frozen=True)
class SideRecord:
    state: UcavState
    obs: np.ndarray
    action: ControlRates
    sparse: float
    extra: float
    homotopy: float
    outcome: CombatOutcome


@dataclass(frozen=True)
class StepRecord:
    step: int
    done: bool
    q: float
    blue: SideRecord
    red: SideRecord

    @property
    def timeout(self) -> bool:
        return self.done and self.blue.outcome is self.red.outcome is CombatOutcome.SURVIVAL


@dataclass
class CombatEnv:
    params: AircraftParams = field(default_factory=AircraftParams)
    reward: RewardConfig = field(default_factory=RewardConfig)
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)

    def __post_init__(self) -> None:
        self.blue: UcavState | None = None
        self.red: UcavState | None = None
        self.steps = 0
        self.done = True

    def reset(self, rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Start an episode; without ``rng`` the scenario seed is used."""
        if rng is None:
            rng = np.random.default_rng(self.scenario.seed)
        self.blue = self.scenario.blue.to_state()
        self.red = sample_red(self.scenario, self.blue, rng)
        self.steps = 0
        self.done = False
        return self.observations()

    def observations(self) -> tuple[np.ndarray, np.ndarray]:
        geo_b = relative_geometry(self.blue, self.red)
        geo_r = relative_geometry(self.red, self.blue)
        d = self.scenario.d_norm
        return (
            observation_from(geo_b, self.blue, self.red, self.params, d),
            observation_from(geo_r, self.red, self.blue, self.params, d),
        )

    def step(self, action_b: ControlRates, action_r: ControlRates, q: float) -> StepRecord:
        if self.done:
            raise EpisodeFinished("call reset() before stepping a finished episode")
        if not 0.0 <= q <= 1.0:
            raise DomainError(f"blend weight {q} outside [0, 1]")
        params = self.params
        blue_prev, red_prev = self.blue, self.red
        blue = dyn.step(blue_prev, action_b, params)
        if self.scenario.red_controller == "horizontal":
            action_r = ControlRates(0.0, 0.0)
            red = dyn.level_flight_step(red_prev, params)
        else:
            red = dyn.step(red_prev, action_r, params)
        self.blue, self.red = blue, red
        self.steps += 1

        geo_b = relative_geometry(blue, red)
        geo_r = relative_geometry(red, blue)
        c_b = classify(blue, red, geo_b, geo_r, params, self.reward)
        c_r = classify(red, blue, geo_r, geo_b, params, self.reward)
        done = (
            c_b is not CombatOutcome.SURVIVAL
            or c_r is not CombatOutcome.SURVIVAL
            or self.steps >= self.scenario.max_steps
        )
        self.done = done
        d = self.scenario.d_norm
        sides = []
        for state, opp, geo, act, c_own, c_opp in (
            (blue, red, geo_b, action_b, c_b, c_r),
            (red, blue, geo_r, action_r, c_r, c_b),
        ):
            r = sparse_reward(c_own, c_opp, self.reward)
            r_extra = extra_reward(geo, self.reward)
            sides.append(
                SideRecord(
                    state=state,
                    obs=observation_from(geo, state, opp, params, d),
                    action=dyn.clamp_rates(act, params),
                    sparse=r,
                    extra=r_extra,
                    homotopy=homotopy_reward(r, r_extra, q),
                    outcome=c_own,
                )
            )
        return StepRecord(step=self.steps, done=done, q=q, blue=sides[0], red=sides[1])
