"""Training, evaluation, dueling and trajectory export."""

from __future__ import annotations

import csv
import enum
import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .checkpoint import load_checkpoint, read_meta, save_checkpoint
from .dynamics import STATE_FIELDS, AircraftParams, ControlRates
from .env import CombatEnv, CombatOutcome, RewardConfig, ScenarioConfig, StepRecord
from .geometry import OBS_DIM
from .homotopy import HomotopySchedule, ScheduleConfig
from .sac import Learner, ReplayBuffer, SacConfig

ACT_DIM = 2


class ConfigError(ValueError):
    pass


class MethodVariant(str, enum.Enum):
    SAC_S = "sac-s"  # sparse reward only, q frozen at 0
    SAC_R = "sac-r"  # shaped reward, q frozen at 1
    HSAC = "hsac"  # scheduled q


class Task(str, enum.Enum):
    ATTACK_HORIZONTAL = "attack_horizontal"
    SELF_PLAY = "self_play"


def scale_action(a: np.ndarray, params: AircraftParams) -> ControlRates:
    """Map a normalized action in (-1, 1)^2 to control rates."""
    return ControlRates(float(a[0]) * params.d_alpha, float(a[1]) * params.d_mu)


@dataclass(frozen=True)
class RunConfig:
    method: MethodVariant = MethodVariant.HSAC
    task: Task = Task.ATTACK_HORIZONTAL
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    aircraft: AircraftParams = field(default_factory=AircraftParams)
    reward: RewardConfig = field(default_factory=RewardConfig)
    sac: SacConfig = field(default_factory=SacConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    episodes: int = 2000
    eval_interval: int = 10
    eval_episodes: int = 1
    eval_scenario: ScenarioConfig | None = None  # None -> training scenario
    checkpoint_interval: int = 0  # episodes; 0 -> final checkpoint only
    update_log_interval: int = 100
    updates_per_step: int = 1
    save_replay: bool = True
    seed: int = 0
    out_dir: str = "runs/default"

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "method", MethodVariant(self.method))
            object.__setattr__(self, "task", Task(self.task))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.episodes < 1 or self.eval_interval < 1 or self.eval_episodes < 0:
            raise ConfigError("episodes and eval_interval must be >= 1, eval_episodes >= 0")
        if self.updates_per_step < 1:
            raise ConfigError("updates_per_step must be >= 1")
        if self.checkpoint_interval < 0 or self.update_log_interval < 0 or self.seed < 0:
            raise ConfigError("intervals and seed must be non-negative")
        if self.task is Task.SELF_PLAY and self.scenario.red_controller != "policy":
            object.__setattr__(self, "scenario", _replace(self.scenario, red_controller="policy"))

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        builders = {
            "scenario": ScenarioConfig.from_dict,
            "eval_scenario": ScenarioConfig.from_dict,
            "aircraft": AircraftParams.from_dict,
            "reward": RewardConfig.from_dict,
            "sac": SacConfig.from_dict,
            "schedule": lambda d: ScheduleConfig(**d),
        }
        try:
            for key, build in builders.items():
                if isinstance(data.get(key), dict):
                    data[key] = build(data[key])
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_yaml(cls, path: str | os.PathLike) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(yaml.safe_load(fh))

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "task": self.task.value,
            "scenario": self.scenario.to_dict(),
            "aircraft": self.aircraft.to_dict(),
            "reward": self.reward.to_dict(),
            "sac": self.sac.to_dict(),
            "schedule": {"big_n": self.schedule.big_n, "big_m": self.schedule.big_m, "epsilon": self.schedule.epsilon},
            "episodes": self.episodes,
            "eval_interval": self.eval_interval,
            "eval_episodes": self.eval_episodes,
            "eval_scenario": None if self.eval_scenario is None else self.eval_scenario.to_dict(),
            "checkpoint_interval": self.checkpoint_interval,
            "update_log_interval": self.update_log_interval,
            "updates_per_step": self.updates_per_step,
            "save_replay": self.save_replay,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }

    def with_overrides(self, **kw) -> "RunConfig":
        return _replace(self, **kw)

    def make_env(self) -> CombatEnv:
        return CombatEnv(self.aircraft, self.reward, self.scenario)

    def make_schedule(self) -> HomotopySchedule:
        sched = self.schedule.build()
        if self.method is MethodVariant.SAC_S:
            sched.n, sched.frozen = sched.big_n, True
        elif self.method is MethodVariant.SAC_R:
            sched.frozen = True
        return sched


def _replace(obj, **kw):
    return type(obj)(**{**{f.name: getattr(obj, f.name) for f in fields(obj)}, **kw})


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class EvalReport:
    """Outcome tallies from one side's perspective.

    A win is own firing-envelope occupancy or surviving while the opponent
    overloads; a mutual kill (both inside each other's envelope on the same
    step) is tallied as a win for both sides and also counted separately.
    """

    episodes: int
    wins: int
    losses: int
    draws: int
    mutual_kills: int
    avg_time: float
    mean_return: float

    @property
    def win_rate(self) -> float:
        return self.wins / self.episodes if self.episodes else 0.0

    @property
    def loss_rate(self) -> float:
        return self.losses / self.episodes if self.episodes else 0.0

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["win_rate"] = self.win_rate
        d["loss_rate"] = self.loss_rate
        return d


def episode_result(own: CombatOutcome, opp: CombatOutcome) -> str:
    """Tally bucket for the final step of an episode: win, loss, draw or mutual."""
    if own is CombatOutcome.KILLED and opp is CombatOutcome.KILLED:
        return "mutual"
    if own is CombatOutcome.WIN or (own is CombatOutcome.SURVIVAL and opp is CombatOutcome.OVERLOADED):
        return "win"
    if own in (CombatOutcome.OVERLOADED, CombatOutcome.KILLED):
        return "loss"
    return "draw"


def summarize(results: list[tuple[str, int, float]], dt: float) -> EvalReport:
    """Build a report from ``(bucket, steps, sparse return)`` per episode."""
    n = len(results)
    if n == 0:
        raise ValueError("no episodes to summarize")
    buckets = [r[0] for r in results]
    mutual = buckets.count("mutual")
    return EvalReport(
        episodes=n,
        wins=buckets.count("win") + mutual,
        losses=buckets.count("loss"),
        draws=buckets.count("draw"),
        mutual_kills=mutual,
        avg_time=float(np.mean([r[1] * dt for r in results])),
        mean_return=float(np.mean([r[2] for r in results])),
    )


def run_episode(env: CombatEnv, blue_policy, red_policy, rng: np.random.Generator, q: float = 0.0):
    """One rollout; policies map an observation to a normalized action.

    Returns the list of step records. ``red_policy`` is ignored when red
    flies the scripted level-flight target.
    """
    obs_b, obs_r = env.reset(rng)
    records = []
    zero = ControlRates()
    while True:
        a_b = scale_action(blue_policy(obs_b), env.params)
        a_r = scale_action(red_policy(obs_r), env.params) if red_policy is not None else zero
        rec = env.step(a_b, a_r, q)
        records.append(rec)
        if rec.done:
            return records
        obs_b, obs_r = rec.blue.obs, rec.red.obs


def _deterministic(learner: Learner):
    return lambda obs: learner.act(obs, None, deterministic=True)


def _rollout_reports(env: CombatEnv, blue_policy, red_policy, episodes: int, seed: int):
    if episodes < 1:
        raise ValueError("need at least one episode")
    res_b, res_r = [], []
    for j in range(episodes):
        recs = run_episode(env, blue_policy, red_policy, np.random.default_rng([seed, j]))
        last = recs[-1]
        res_b.append((episode_result(last.blue.outcome, last.red.outcome), len(recs), sum(r.blue.sparse for r in recs)))
        res_r.append((episode_result(last.red.outcome, last.blue.outcome), len(recs), sum(r.red.sparse for r in recs)))
    dt = env.params.dt
    return summarize(res_b, dt), summarize(res_r, dt)


def evaluate_learner(
    learner: Learner, env: CombatEnv, episodes: int, seed: int, red_learner: Learner | None = None
) -> EvalReport:
    """Deterministic rollouts scored with the sparse reward only."""
    if env.scenario.red_controller == "policy":
        red = _deterministic(red_learner or learner)
    else:
        red = None
    report, _ = _rollout_reports(env, _deterministic(learner), red, episodes, seed)
    return report


def _env_from_meta(meta: dict, scenario: ScenarioConfig | None) -> CombatEnv:
    cfg = RunConfig.from_dict(meta["config"]) if "config" in meta else RunConfig()
    return CombatEnv(cfg.aircraft, cfg.reward, scenario or cfg.eval_scenario or cfg.scenario)


def evaluate(checkpoint, scenario: ScenarioConfig | None, episodes: int, seed: int) -> EvalReport:
    learner, meta, _ = load_checkpoint(checkpoint)
    return evaluate_learner(learner, _env_from_meta(meta, scenario), episodes, seed)


def duel(checkpoint_blue, checkpoint_red, scenario: ScenarioConfig | None, episodes: int, seed: int):
    """Each side flies its own deterministic policy; returns (blue report, red report)."""
    if episodes < 1:
        raise ValueError("need at least one episode")
    blue, meta, _ = load_checkpoint(checkpoint_blue)
    red, _, _ = load_checkpoint(checkpoint_red)
    env = _env_from_meta(meta, scenario)
    env.scenario = _replace(env.scenario, red_controller="policy")
    return _rollout_reports(env, _deterministic(blue), _deterministic(red), episodes, seed)


def duel_learners(blue: Learner, red: Learner, env: CombatEnv, episodes: int, seed: int):
    env.scenario = _replace(env.scenario, red_controller="policy")
    return _rollout_reports(env, _deterministic(blue), _deterministic(red), episodes, seed)


# ---------------------------------------------------------------- trajectory export

_SIDE_FIELDS = (*STATE_FIELDS, "alpha_dot", "mu_dot", "sparse", "extra", "homotopy", "outcome")
CSV_COLUMNS: tuple[str, ...] = (
    "step",
    "t",
    "q",
    "done",
    *(f"blue_{f}" for f in _SIDE_FIELDS),
    *(f"red_{f}" for f in _SIDE_FIELDS),
)


def record_row(rec: StepRecord, dt: float) -> list:
    row = [rec.step, round(rec.step * dt, 10), rec.q, int(rec.done)]
    for side in (rec.blue, rec.red):
        row.extend(repr(float(v)) for v in side.state.as_tuple())
        row.extend(
            [
                repr(side.action.alpha_dot),
                repr(side.action.mu_dot),
                repr(side.sparse),
                repr(side.extra),
                repr(side.homotopy),
                side.outcome.value,
            ]
        )
    return row


def write_trajectory_csv(records: list[StepRecord], path: str | os.PathLike, dt: float) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(record_row(rec, dt))
    return path


def export_trajectory(
    checkpoint_blue,
    scenario: ScenarioConfig | None,
    seed: int,
    path: str | os.PathLike,
    checkpoint_red=None,
    plot: bool = True,
) -> tuple[Path, Path | None]:
    """Roll out one deterministic episode and write its CSV (plus a 3D plot)."""
    blue, meta, _ = load_checkpoint(checkpoint_blue)
    env = _env_from_meta(meta, scenario)
    red_policy = None
    if env.scenario.red_controller == "policy":
        red = load_checkpoint(checkpoint_red)[0] if checkpoint_red is not None else blue
        red_policy = _deterministic(red)
    try:
        records = run_episode(env, _deterministic(blue), red_policy, np.random.default_rng([seed, 0]))
        csv_path = write_trajectory_csv(records, path, env.params.dt)
        png = None
        if plot:
            from .plotting import plot_trajectory

            png = plot_trajectory(records, Path(path).with_suffix(".png"))
    except OSError as exc:
        raise IOError(f"cannot write trajectory: {exc}") from exc
    return csv_path, png


# ---------------------------------------------------------------- training


def _json_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=True) + "\n"


@dataclass
class TrainState:
    learner: Learner
    replay: ReplayBuffer
    schedule: HomotopySchedule
    episode: int
    rngs: dict[str, np.random.Generator]


def _fresh_state(cfg: RunConfig) -> TrainState:
    root = np.random.SeedSequence(cfg.seed)
    init_ss, env_ss, act_ss, upd_ss = root.spawn(4)
    learner = Learner.create(cfg.sac, OBS_DIM, ACT_DIM, np.random.default_rng(init_ss))
    replay = ReplayBuffer(cfg.sac.capacity, OBS_DIM, ACT_DIM, np.dtype(cfg.sac.dtype))
    rngs = {
        "env": np.random.default_rng(env_ss),
        "act": np.random.default_rng(act_ss),
        "update": np.random.default_rng(upd_ss),
    }
    return TrainState(learner, replay, cfg.make_schedule(), 0, rngs)


def _resume_state(cfg: RunConfig, checkpoint) -> TrainState:
    learner, meta, replay = load_checkpoint(checkpoint, with_replay=True)
    if replay is None:
        replay = ReplayBuffer(cfg.sac.capacity, OBS_DIM, ACT_DIM, np.dtype(cfg.sac.dtype))
    rngs = {}
    for name, state in meta["rng"].items():
        gen = np.random.default_rng()
        gen.bit_generator.state = state
        rngs[name] = gen
    return TrainState(learner, replay, HomotopySchedule.from_dict(meta["schedule"]), int(meta["episode"]), rngs)


def _save(cfg: RunConfig, st: TrainState, path: Path) -> Path:
    meta = {
        "seed": cfg.seed,
        "episode": st.episode,
        "q": st.schedule.q,
        "n": st.schedule.n,
        "schedule": st.schedule.to_dict(),
        "config": cfg.to_dict(),
        "replay_capacity": st.replay.capacity,
        "rng": {k: g.bit_generator.state for k, g in st.rngs.items()},
    }
    return save_checkpoint(path, st.learner, meta, replay=st.replay if cfg.save_replay else None)


def _truncate_log(path: Path, key: str, last: int) -> None:
    """Drop log lines written after the checkpoint being resumed from."""
    if not path.exists():
        return
    with open(path) as fh:
        lines = [ln for ln in fh if ln.strip() and json.loads(ln)[key] <= last]
    with open(path, "w") as fh:
        fh.writelines(lines)


def train(cfg: RunConfig, resume: str | os.PathLike | None = None, progress=None) -> Path:
    """Run the episode/update loop and return the final checkpoint path.

    Writes ``metrics.jsonl`` (one line per episode), ``updates.jsonl`` (every
    ``update_log_interval`` updates) and checkpoints under ``cfg.out_dir``.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    st = _resume_state(cfg, resume) if resume is not None else _fresh_state(cfg)
    mode = "a" if resume is not None else "w"
    if resume is not None:
        _truncate_log(out / "metrics.jsonl", "episode", st.episode)
        _truncate_log(out / "updates.jsonl", "update", st.learner.updates)
    env = cfg.make_env()
    eval_env = CombatEnv(cfg.aircraft, cfg.reward, cfg.eval_scenario or cfg.scenario)
    self_play = cfg.task is Task.SELF_PLAY
    learner, replay, sched = st.learner, st.replay, st.schedule
    warmup = cfg.sac.warmup_steps
    batch = cfg.sac.batch_size
    zero = ControlRates()

    with open(out / "metrics.jsonl", mode) as metrics, open(out / "updates.jsonl", mode) as upd_log:
        while st.episode < cfg.episodes:
            obs_b, obs_r = env.reset(st.rngs["env"])
            ret = {"shaped_b": 0.0, "sparse_b": 0.0, "shaped_r": 0.0, "sparse_r": 0.0}
            loss_acc = np.zeros(4)
            n_upd = 0
            advances = 0
            while True:
                q = sched.q
                if replay.total < warmup:
                    a_b = st.rngs["act"].uniform(-1.0, 1.0, ACT_DIM)
                    a_r = st.rngs["act"].uniform(-1.0, 1.0, ACT_DIM) if self_play else None
                else:
                    a_b = learner.act(obs_b, st.rngs["act"])
                    a_r = learner.act(obs_r, st.rngs["act"]) if self_play else None
                rates_r = scale_action(a_r, cfg.aircraft) if self_play else zero
                rec = env.step(scale_action(a_b, cfg.aircraft), rates_r, q)
                terminal = rec.done and not rec.timeout
                replay.add(obs_b, a_b, rec.blue.homotopy, rec.blue.obs, terminal, q)
                if self_play:
                    replay.add(obs_r, a_r, rec.red.homotopy, rec.red.obs, terminal, q)
                ret["shaped_b"] += rec.blue.homotopy
                ret["sparse_b"] += rec.blue.sparse
                ret["shaped_r"] += rec.red.homotopy
                ret["sparse_r"] += rec.red.sparse

                ready = replay.total >= warmup and len(replay) >= batch
                for _ in range(cfg.updates_per_step if ready else 0):
                    info = learner.update_step(replay.sample(batch, st.rngs["update"]), st.rngs["update"])
                    loss_acc += (info.critic, info.actor, info.alpha_loss, info.alpha)
                    n_upd += 1
                    if not sched.frozen:
                        sched.record(info.grad_norm)
                        advances += sched.maybe_advance()
                    if cfg.update_log_interval and learner.updates % cfg.update_log_interval == 0:
                        upd_log.write(
                            _json_line(
                                {
                                    "update": learner.updates,
                                    "critic_loss": info.critic,
                                    "actor_loss": info.actor,
                                    "alpha_loss": info.alpha_loss,
                                    "alpha": info.alpha,
                                    "grad_norm": info.grad_norm,
                                    "q": sched.q,
                                }
                            )
                        )
                if rec.done:
                    break
                obs_b, obs_r = rec.blue.obs, rec.red.obs

            st.episode += 1
            mean_losses = (loss_acc / n_upd) if n_upd else np.full(4, float("nan"))
            row = {
                "episode": st.episode,
                "steps": rec.step,
                "q": sched.q,
                "n": sched.n,
                "advances": advances,
                "updates": learner.updates,
                "shaped_return": ret["shaped_b"],
                "sparse_return_blue": ret["sparse_b"],
                "sparse_return_red": ret["sparse_r"],
                "outcome_blue": rec.blue.outcome.value,
                "outcome_red": rec.red.outcome.value,
                "critic_loss": float(mean_losses[0]),
                "actor_loss": float(mean_losses[1]),
                "alpha_loss": float(mean_losses[2]),
                "alpha": float(mean_losses[3]),
            }
            if self_play:
                row["shaped_return_red"] = ret["shaped_r"]
            if cfg.eval_episodes and st.episode % cfg.eval_interval == 0:
                rep = evaluate_learner(learner, eval_env, cfg.eval_episodes, cfg.seed)
                row["eval_return"] = rep.mean_return
                row["eval_win_rate"] = rep.win_rate
            metrics.write(_json_line(row))
            metrics.flush()
            if progress is not None:
                progress(row)
            if cfg.checkpoint_interval and st.episode % cfg.checkpoint_interval == 0:
                _save(cfg, st, out / f"checkpoint_{st.episode:06d}.npz")
    return _save(cfg, st, out / "final.npz")


def load_metrics(path: str | os.PathLike) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def checkpoint_info(path) -> dict:
    meta = read_meta(path)
    return {k: meta[k] for k in ("seed", "episode", "q", "n", "updates") if k in meta}
