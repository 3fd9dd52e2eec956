"""Self-play confrontation runs and the blue/red sparse-return gap trend.

    python scripts/self_play.py --seeds 0 1 2 --out runs/self_play
"""

import argparse
import json
from pathlib import Path

import numpy as np

from hsac.harness import RunConfig, load_metrics, train
from hsac.plotting import moving_average, plot_metrics


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/self_play.yaml")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--episodes", type=int)
    ap.add_argument("--window", type=int, default=50)
    ap.add_argument("--out", default="runs/self_play")
    args = ap.parse_args()

    base = RunConfig.from_yaml(args.config)
    if args.episodes:
        base = base.with_overrides(episodes=args.episodes)
    for seed in args.seeds:
        out = Path(args.out) / f"seed{seed}"
        train(base.with_overrides(seed=seed, out_dir=str(out)))
        rows = load_metrics(out / "metrics.jsonl")
        plot_metrics(rows, out / "metrics.png", window=args.window)
        gap = np.array([abs(r["sparse_return_blue"] - r["sparse_return_red"]) for r in rows])
        ma = moving_average(gap, args.window)
        head = 100 - args.window + 1
        print(
            json.dumps(
                {
                    "seed": seed,
                    "gap_first100": float(np.mean(ma[:head])),
                    "gap_last100": float(np.mean(ma[len(gap) - 100 :])),
                    "outcomes": {k: sum(r["outcome_blue"] == k for r in rows) for k in ("win", "killed", "overloaded", "survival")},
                }
            ),
            flush=True,
        )


if __name__ == "__main__":
    main()
