"""Soft actor-critic with twin critics, Polyak targets and a learned temperature."""

from __future__ import annotations

import math
from dataclasses import InitVar, dataclass, field, fields

import numpy as np

from .nn import (
    Adam,
    MlpParams,
    PolicyOutput,
    backward_cached,
    forward_cached,
    flatten_grads,
    init_mlp,
    squashed_backward,
    squashed_from_noise,
)


class EmptyBatch(ValueError):
    pass


class InsufficientData(RuntimeError):
    pass


@dataclass(frozen=True)
class SacConfig:
    gamma: float = 0.996
    tau: float = 0.005
    batch_size: int = 256
    capacity: int = 1_000_000
    hidden: tuple[int, ...] = (256, 256, 256)
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    lr_alpha: float = 3e-4
    init_alpha: float = 1.0
    learn_alpha: bool = True
    target_entropy: float | None = None  # None -> -action_dim
    log_std_band: tuple[float, float] = (-20.0, 2.0)
    warmup: int | None = None  # None -> 10 * batch_size
    dtype: str = "float64"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        object.__setattr__(self, "log_std_band", tuple(float(v) for v in self.log_std_band))
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")
        if self.batch_size < 1 or self.capacity < self.batch_size:
            raise ValueError("need 1 <= batch_size <= capacity")
        if self.init_alpha < 0 or (self.learn_alpha and self.init_alpha == 0):
            raise ValueError("a learned temperature must start positive")
        if self.dtype not in ("float64", "float32"):
            raise ValueError("dtype must be float64 or float32")

    @property
    def warmup_steps(self) -> int:
        return 10 * self.batch_size if self.warmup is None else self.warmup

    def entropy_target(self, action_dim: int) -> float:
        return -float(action_dim) if self.target_entropy is None else self.target_entropy

    @classmethod
    def from_dict(cls, data: dict) -> "SacConfig":
        return cls(**data)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["hidden"] = list(self.hidden)
        d["log_std_band"] = list(self.log_std_band)
        return d


@dataclass
class Batch:
    obs: np.ndarray
    act: np.ndarray
    rew: np.ndarray
    next_obs: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return len(self.rew)


class ReplayBuffer:
    """FIFO ring buffer; sampling is uniform with replacement."""

    def __init__(self, capacity: int, obs_dim: int, act_dim: int, dtype=np.float64) -> None:
        self.capacity = int(capacity)
        self.obs = np.zeros((capacity, obs_dim), dtype)
        self.act = np.zeros((capacity, act_dim), dtype)
        self.rew = np.zeros(capacity, dtype)
        self.next_obs = np.zeros((capacity, obs_dim), dtype)
        self.done = np.zeros(capacity, dtype)
        self.q = np.zeros(capacity, dtype)
        self.ptr = 0
        self.size = 0
        self.total = 0

    def __len__(self) -> int:
        return self.size

    def add(self, obs, act, rew: float, next_obs, done: bool, q: float = 0.0) -> None:
        if not math.isfinite(rew):
            raise ValueError("reward must be finite")
        i = self.ptr
        self.obs[i] = obs
        self.act[i] = act
        self.rew[i] = rew
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self.q[i] = q
        self.ptr = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        self.total += 1

    def sample_indices(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.size == 0:
            raise InsufficientData("replay buffer is empty")
        return rng.integers(0, self.size, size=n)

    def get(self, idx: np.ndarray) -> Batch:
        return Batch(self.obs[idx], self.act[idx], self.rew[idx], self.next_obs[idx], self.done[idx])

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        return self.get(self.sample_indices(n, rng))

    def state_dict(self) -> dict:
        return {
            "obs": self.obs[: self.size],
            "act": self.act[: self.size],
            "rew": self.rew[: self.size],
            "next_obs": self.next_obs[: self.size],
            "done": self.done[: self.size],
            "q": self.q[: self.size],
            "ptr": self.ptr,
            "total": self.total,
        }

    def load_state_dict(self, d: dict) -> None:
        n = len(d["rew"])
        for name in ("obs", "act", "rew", "next_obs", "done", "q"):
            getattr(self, name)[:n] = d[name]
        self.size = n
        self.ptr = int(d["ptr"])
        self.total = int(d["total"])


@dataclass
class LossInfo:
    critic: float
    actor: float
    alpha_loss: float
    alpha: float
    grad_norm: float


@dataclass
class Learner:
    """Actor, twin critics, their targets, temperature and optimizers."""

    config: SacConfig
    obs_dim: int
    act_dim: int
    actor: MlpParams
    critic1: MlpParams
    critic2: MlpParams
    target1: MlpParams
    target2: MlpParams
    log_alpha: InitVar[float]
    opt_actor: Adam
    opt_critic1: Adam
    opt_critic2: Adam
    opt_alpha: Adam
    updates: int = 0
    log_alpha_arr: np.ndarray = field(init=False)

    def __post_init__(self, log_alpha: float) -> None:
        self.log_alpha_arr = np.array([log_alpha], dtype=np.float64)

    @classmethod
    def create(cls, config: SacConfig, obs_dim: int, act_dim: int, rng: np.random.Generator) -> "Learner":
        dt = np.dtype(config.dtype)
        hidden = list(config.hidden)
        actor = init_mlp([obs_dim, *hidden, 2 * act_dim], rng, dt)
        c1 = init_mlp([obs_dim + act_dim, *hidden, 1], rng, dt)
        c2 = init_mlp([obs_dim + act_dim, *hidden, 1], rng, dt)
        log_alpha = math.log(config.init_alpha) if config.init_alpha > 0 else -math.inf
        return cls(
            config=config,
            obs_dim=obs_dim,
            act_dim=act_dim,
            actor=actor,
            critic1=c1,
            critic2=c2,
            target1=c1.copy(),
            target2=c2.copy(),
            log_alpha=log_alpha,
            opt_actor=Adam(lr=config.lr_actor),
            opt_critic1=Adam(lr=config.lr_critic),
            opt_critic2=Adam(lr=config.lr_critic),
            opt_alpha=Adam(lr=config.lr_alpha),
        )

    # -- basic evaluations

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha_arr[0]))

    @property
    def h_bar(self) -> float:
        return self.config.entropy_target(self.act_dim)

    def policy(self, obs: np.ndarray) -> tuple[PolicyOutput, list[np.ndarray]]:
        head, cache = forward_cached(self.actor, obs)
        return PolicyOutput.from_head(head, self.config.log_std_band), cache

    def act(self, obs: np.ndarray, rng: np.random.Generator | None, deterministic: bool = False) -> np.ndarray:
        """Normalized action in (-1, 1) for a single observation."""
        out, _ = self.policy(np.asarray(obs, dtype=self.actor.weights[0].dtype))
        if deterministic:
            return np.tanh(out.mean[0]).astype(np.float64)
        noise = rng.standard_normal(self.act_dim)
        a, _ = squashed_from_noise(out, noise[None, :])
        return a[0].astype(np.float64)

    @staticmethod
    def q_value(critic: MlpParams, obs: np.ndarray, act: np.ndarray):
        out, cache = forward_cached(critic, np.concatenate([obs, act], axis=1))
        return out[:, 0], cache

    def soft_value(self, obs: np.ndarray, noise: np.ndarray, targets: bool = False) -> np.ndarray:
        """Single-sample ``min(Q1, Q2)(s, a) - alpha * log pi(a|s)`` with ``a`` from ``noise``."""
        obs = np.atleast_2d(obs)
        out, _ = self.policy(obs)
        a, logp = squashed_from_noise(out, np.atleast_2d(noise))
        c1, c2 = (self.target1, self.target2) if targets else (self.critic1, self.critic2)
        q1, _ = self.q_value(c1, obs, a)
        q2, _ = self.q_value(c2, obs, a)
        return np.minimum(q1, q2) - self.alpha * logp

    # -- losses (explicit noise keeps them deterministic for gradient checks)

    def critic_loss(self, batch: Batch, noise_next: np.ndarray):
        """Returns ((loss1, loss2), grads for critic1, grads for critic2)."""
        n = len(batch)
        if n == 0:
            raise EmptyBatch("critic loss needs a nonempty batch")
        v_next = self.soft_value(batch.next_obs, noise_next, targets=True)
        y = batch.rew + self.config.gamma * (1.0 - batch.done) * v_next
        losses, grads = [], []
        for critic in (self.critic1, self.critic2):
            q, cache = self.q_value(critic, batch.obs, batch.act)
            err = q - y
            losses.append(0.5 * float(np.mean(err * err)))
            g, _ = backward_cached(critic, cache, (err / n)[:, None], need_input=False)
            grads.append(g)
        return (losses[0], losses[1]), grads[0], grads[1]

    def actor_loss(self, batch: Batch, noise: np.ndarray):
        """Returns (loss, actor grads, log-probs of the reparameterized actions)."""
        n = len(batch)
        if n == 0:
            raise EmptyBatch("actor loss needs a nonempty batch")
        out, a_cache = self.policy(batch.obs)
        a, logp = squashed_from_noise(out, noise)
        q1, cache1 = self.q_value(self.critic1, batch.obs, a)
        q2, cache2 = self.q_value(self.critic2, batch.obs, a)
        use1 = q1 <= q2
        alpha = self.alpha
        loss = float(np.mean(alpha * logp - np.where(use1, q1, q2)))
        # d loss / d Q_min = -1/n, routed to whichever critic is the minimum
        up1 = (-(use1.astype(a.dtype)) / n)[:, None]
        up2 = (-((~use1).astype(a.dtype)) / n)[:, None]
        _, gin1 = backward_cached(self.critic1, cache1, up1)
        _, gin2 = backward_cached(self.critic2, cache2, up2)
        g_a = (gin1 + gin2)[:, self.obs_dim :]
        g_logp = np.full(n, alpha / n, dtype=a.dtype)
        g_mean, g_ls = squashed_backward(out, noise, a, g_a, g_logp)
        grads, _ = backward_cached(self.actor, a_cache, out.head_grad(g_mean, g_ls), need_input=False)
        return loss, grads, logp

    def temperature_loss(self, logp: np.ndarray) -> tuple[float, float]:
        """Loss ``mean(-alpha * (log pi + H))`` and its derivative w.r.t. log alpha."""
        if np.size(logp) == 0:
            raise EmptyBatch("temperature loss needs a nonempty batch")
        alpha = self.alpha
        m = float(np.mean(logp + self.h_bar))
        return -alpha * m, -alpha * m

    def temperature_loss_batch(self, batch: Batch, noise: np.ndarray) -> tuple[float, float]:
        if len(batch) == 0:
            raise EmptyBatch("temperature loss needs a nonempty batch")
        out, _ = self.policy(batch.obs)
        _, logp = squashed_from_noise(out, noise)
        return self.temperature_loss(logp)

    def target_update(self, tau: float | None = None) -> None:
        tau = self.config.tau if tau is None else tau
        for tgt, src in ((self.target1, self.critic1), (self.target2, self.critic2)):
            if tau == 1.0:
                tgt.buffer[...] = src.buffer
            else:
                # increment form: equal source and target stay bit-identical
                tgt.buffer += tau * (src.buffer - tgt.buffer)

    # -- one horizontal-corrector step

    def update_step(self, batch: Batch, rng: np.random.Generator) -> LossInfo:
        """Critic, actor, temperature, then targets; returns losses and the actor-gradient norm."""
        n = len(batch)
        if n == 0:
            raise InsufficientData("update needs at least one transition")
        shape = (n, self.act_dim)
        dt = self.actor.weights[0].dtype
        noise_next = rng.standard_normal(shape).astype(dt)
        noise = rng.standard_normal(shape).astype(dt)

        (l1, l2), g1, g2 = self.critic_loss(batch, noise_next)
        self.opt_critic1.step([self.critic1.buffer], [flatten_grads(g1)])
        self.opt_critic2.step([self.critic2.buffer], [flatten_grads(g2)])

        actor_l, ga, logp = self.actor_loss(batch, noise)
        ga_flat = flatten_grads(ga)
        grad_norm = float(np.linalg.norm(ga_flat.astype(np.float64)))
        self.opt_actor.step([self.actor.buffer], [ga_flat])

        alpha_l = 0.0
        if self.config.learn_alpha:
            alpha_l, g_alpha = self.temperature_loss(logp)
            self.opt_alpha.step([self.log_alpha_arr], [np.array([g_alpha])])

        self.target_update()
        self.updates += 1
        return LossInfo(0.5 * (l1 + l2), actor_l, alpha_l, self.alpha, grad_norm)

    # -- parameter bundles for checkpoints

    def networks(self) -> dict[str, MlpParams]:
        return {
            "actor": self.actor,
            "critic1": self.critic1,
            "critic2": self.critic2,
            "target1": self.target1,
            "target2": self.target2,
        }

    def optimizers(self) -> dict[str, Adam]:
        return {
            "actor": self.opt_actor,
            "critic1": self.opt_critic1,
            "critic2": self.opt_critic2,
            "alpha": self.opt_alpha,
        }
