"""Train HSAC on the attack-horizontal-flight task and score the four fixed starts.

    python scripts/attack_horizontal.py --seeds 0 1 2 --out runs/attack
"""

import argparse
import json
from pathlib import Path

import numpy as np

from hsac.env import ScenarioConfig
from hsac.harness import RunConfig, evaluate, load_metrics, train
from hsac.plotting import plot_metrics

STARTS = ("advantageous", "disadvantageous", "head-on", "neutral")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/attack_horizontal.yaml")
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--episodes", type=int, help="override the episode budget")
    ap.add_argument("--eval-episodes", type=int, default=200)
    ap.add_argument("--out", default="runs/attack")
    args = ap.parse_args()

    base = RunConfig.from_yaml(args.config)
    if args.episodes:
        base = base.with_overrides(episodes=args.episodes)
    summary = {}
    for seed in args.seeds:
        out = Path(args.out) / f"seed{seed}"
        ckpt = train(base.with_overrides(seed=seed, out_dir=str(out)))
        rows = load_metrics(out / "metrics.jsonl")
        evals = [r["eval_return"] for r in rows if "eval_return" in r]
        plot_metrics(rows, out / "metrics.png")
        result = {
            "first10_eval_return": float(np.mean(evals[:10])) if evals else None,
            "last10_eval_return": float(np.mean(evals[-10:])) if evals else None,
        }
        for name in STARTS:
            sc = ScenarioConfig.table4(name, max_steps=base.scenario.max_steps)
            rep = evaluate(ckpt, sc, args.eval_episodes, seed)
            result[name] = {"win_rate": rep.win_rate, "avg_time": rep.avg_time}
        summary[seed] = result
        print(json.dumps({"seed": seed, **result}), flush=True)
    (Path(args.out) / "summary.json").write_text(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
