"""Matplotlib figures for trajectories and training curves."""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_trajectory(records, path: str | os.PathLike) -> Path:
    """3D flight paths (x, y, altitude) of both aircraft."""
    path = Path(path)
    fig = plt.figure(figsize=(7, 6))
    ax = fig.add_subplot(projection="3d")
    for side, color in (("blue", "tab:blue"), ("red", "tab:red")):
        states = [getattr(r, side).state for r in records]
        xs = [s.x for s in states]
        ys = [s.y for s in states]
        hs = [s.h for s in states]
        ax.plot(xs, ys, hs, color=color, label=side)
        ax.scatter(xs[0], ys[0], hs[0], color=color, marker="o")
    last = records[-1]
    ax.set_title(f"blue: {last.blue.outcome.value}, red: {last.red.outcome.value}, t = {last.step} steps")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_zlabel("altitude [m]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def moving_average(x, window: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if window <= 1 or len(x) < window:
        return x
    kernel = np.ones(window) / window
    return np.convolve(x, kernel, mode="valid")


def plot_metrics(rows: list[dict], path: str | os.PathLike, window: int = 50) -> Path:
    """Training return, evaluation return and the blend weight against episode."""
    path = Path(path)
    ep = np.array([r["episode"] for r in rows])
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    shaped = moving_average([r["shaped_return"] for r in rows], window)
    axes[0].plot(ep[len(ep) - len(shaped):], shaped, label="training (shaped)")
    sparse = moving_average([r["sparse_return_blue"] for r in rows], window)
    axes[0].plot(ep[len(ep) - len(sparse):], sparse, label="training (sparse)")
    axes[0].set_ylabel("episode return")
    axes[0].legend()
    ev = [(r["episode"], r["eval_return"]) for r in rows if "eval_return" in r]
    if ev:
        e, v = zip(*ev)
        axes[1].plot(e, v, ".", alpha=0.4)
        axes[1].plot(e[len(e) - len(moving_average(v, 10)):], moving_average(v, 10))
    axes[1].set_ylabel("evaluation return (sparse)")
    axes[2].plot(ep, [r["q"] for r in rows])
    axes[2].set_ylabel("q")
    axes[2].set_xlabel("episode")
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path
