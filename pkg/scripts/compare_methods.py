"""SAC-s, SAC-r and HSAC on the same budget, scored on the fixed starts and in duels.

    python scripts/compare_methods.py --episodes 500 --out runs/compare
"""

import argparse
import json
from pathlib import Path

from hsac.env import ScenarioConfig
from hsac.harness import RunConfig, duel, evaluate, train

METHODS = ("sac-s", "sac-r", "hsac")
STARTS = ("advantageous", "disadvantageous", "head-on", "neutral")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/attack_horizontal.yaml")
    ap.add_argument("--episodes", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eval-episodes", type=int, default=50)
    ap.add_argument("--duel-episodes", type=int, default=200)
    ap.add_argument("--out", default="runs/compare")
    args = ap.parse_args()

    base = RunConfig.from_yaml(args.config).with_overrides(episodes=args.episodes, seed=args.seed)
    ckpts = {}
    for method in METHODS:
        ckpts[method] = train(base.with_overrides(method=method, out_dir=str(Path(args.out) / method)))
        row = {"method": method}
        for name in STARTS:
            sc = ScenarioConfig.table4(name, max_steps=base.scenario.max_steps)
            row[name] = evaluate(ckpts[method], sc, args.eval_episodes, args.seed).win_rate
        print(json.dumps(row), flush=True)

    arena = ScenarioConfig(red_controller="policy", max_steps=base.scenario.max_steps)
    for blue in METHODS:
        for red in METHODS:
            if blue == red:
                continue
            b, r = duel(ckpts[blue], ckpts[red], arena, args.duel_episodes, args.seed)
            print(json.dumps({"blue": blue, "red": red, "blue_win": b.win_rate, "red_win": r.win_rate, "draws": b.draws}))


if __name__ == "__main__":
    main()
