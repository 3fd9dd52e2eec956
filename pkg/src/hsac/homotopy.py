"""Blend-weight schedule driven by the trend of actor-gradient magnitudes."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class InsufficientData(ValueError):
    pass


class NonFinite(ValueError):
    pass


def fit_slope(values) -> float:
    """Least-squares slope of ``values`` against indices 1..M (with intercept)."""
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise InsufficientData("slope fit needs at least two values")
    design = np.column_stack([np.arange(1, y.size + 1, dtype=np.float64), np.ones(y.size)])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return float(coef[0])


@dataclass
class HomotopySchedule:
    """``q`` starts at 1 and drops by ``1/big_n`` each time the gradient trend flattens."""

    big_n: int = 100
    big_m: int = 10_000
    epsilon: float = 1e-5
    n: int = 0
    frozen: bool = False
    buffer: deque = field(default_factory=deque)

    def __post_init__(self) -> None:
        if self.big_n < 1 or self.big_m < 2 or not self.epsilon > 0:
            raise ValueError("need big_n >= 1, big_m >= 2 and epsilon > 0")
        if not 0 <= self.n <= self.big_n:
            raise ValueError("step index outside [0, big_n]")
        self.buffer = deque(self.buffer, maxlen=self.big_m)

    @property
    def q(self) -> float:
        # integer arithmetic so the last advance lands on exactly 0
        return max(0.0, (self.big_n - self.n) / self.big_n)

    def record(self, grad_magnitude: float) -> None:
        g = float(grad_magnitude)
        if not math.isfinite(g) or g < 0:
            raise NonFinite(f"gradient magnitude must be finite and >= 0, got {grad_magnitude}")
        self.buffer.append(g)

    def maybe_advance(self) -> bool:
        if self.frozen or self.n >= self.big_n or len(self.buffer) < self.big_m:
            return False
        if abs(fit_slope(self.buffer)) >= self.epsilon:
            return False
        self.n += 1
        self.buffer.clear()
        return True

    def to_dict(self) -> dict:
        return {
            "big_n": self.big_n,
            "big_m": self.big_m,
            "epsilon": self.epsilon,
            "n": self.n,
            "frozen": self.frozen,
            "buffer": list(self.buffer),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HomotopySchedule":
        return cls(
            big_n=int(d["big_n"]),
            big_m=int(d["big_m"]),
            epsilon=float(d["epsilon"]),
            n=int(d["n"]),
            frozen=bool(d.get("frozen", False)),
            buffer=deque(d.get("buffer", [])),
        )


@dataclass(frozen=True)
class ScheduleConfig:
    big_n: int = 100
    big_m: int = 10_000
    epsilon: float = 1e-5

    def __post_init__(self) -> None:
        if self.big_n < 1 or self.big_m < 2 or not self.epsilon > 0:
            raise ValueError("need big_n >= 1, big_m >= 2 and epsilon > 0")

    def build(self) -> HomotopySchedule:
        return HomotopySchedule(self.big_n, self.big_m, self.epsilon)
