"""Command-line entry point: ``python -m hsac <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys

from .env import ScenarioConfig


def _scenario(args) -> ScenarioConfig | None:
    if getattr(args, "preset", None):
        return ScenarioConfig.table4(args.preset, max_steps=args.max_steps, red_controller=args.red_controller)
    if getattr(args, "config", None):
        from .harness import RunConfig

        cfg = RunConfig.from_yaml(args.config)
        return cfg.eval_scenario or cfg.scenario
    return None


def _print(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_train(args) -> None:
    from .harness import RunConfig, train

    cfg = RunConfig.from_yaml(args.config) if args.config else RunConfig()
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out_dir"] = args.out
    if args.episodes is not None:
        over["episodes"] = args.episodes
    cfg = cfg.with_overrides(**over)

    def progress(row):
        if not args.quiet and row["episode"] % args.log_every == 0:
            keys = ("episode", "steps", "q", "outcome_blue", "shaped_return", "eval_return")
            _print({k: row[k] for k in keys if k in row})

    path = train(cfg, resume=args.resume, progress=progress)
    _print({"checkpoint": str(path)})


def _scenario_args(p) -> None:
    p.add_argument("--config", help="run config YAML; its (eval) scenario is used")
    p.add_argument("--preset", choices=["advantageous", "disadvantageous", "head-on", "neutral"])
    p.add_argument("--max-steps", type=int, default=500)
    p.add_argument("--red-controller", choices=["horizontal", "policy"], default="horizontal")
    p.add_argument("--seed", type=int, default=0)


def cmd_evaluate(args) -> None:
    from .harness import evaluate

    _print(evaluate(args.checkpoint, _scenario(args), args.episodes, args.seed).to_dict())


def cmd_duel(args) -> None:
    from .harness import duel

    blue, red = duel(args.blue, args.red, _scenario(args), args.episodes, args.seed)
    _print({"blue": blue.to_dict(), "red": red.to_dict(), "draws": blue.draws})


def cmd_export(args) -> None:
    from .harness import export_trajectory

    csv_path, png = export_trajectory(
        args.checkpoint, _scenario(args), args.seed, args.out, checkpoint_red=args.red, plot=not args.no_plot
    )
    _print({"csv": str(csv_path), "plot": None if png is None else str(png)})


def cmd_plot_metrics(args) -> None:
    from .harness import load_metrics
    from .plotting import plot_metrics

    _print({"plot": str(plot_metrics(load_metrics(args.metrics), args.out, window=args.window))})


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        print(json.dumps({"error": "UsageError", "message": message}), file=sys.stderr)
        raise SystemExit(2)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hsac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a policy")
    p.add_argument("--config", help="run config YAML")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--episodes", type=int)
    p.add_argument("--resume", help="checkpoint to resume from")
    p.add_argument("--log-every", type=int, default=10)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="deterministic sparse-reward evaluation")
    p.add_argument("checkpoint")
    p.add_argument("--episodes", type=int, default=100)
    _scenario_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("duel", help="two checkpoints against each other")
    p.add_argument("blue")
    p.add_argument("red")
    p.add_argument("--episodes", type=int, default=100)
    _scenario_args(p)
    p.set_defaults(func=cmd_duel)

    p = sub.add_parser("export-trajectory", help="write one rollout as CSV and PNG")
    p.add_argument("checkpoint")
    p.add_argument("--red", help="red checkpoint when red flies a policy")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--no-plot", action="store_true")
    _scenario_args(p)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("plot-metrics", help="plot a metrics.jsonl file")
    p.add_argument("metrics")
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=50)
    p.set_defaults(func=cmd_plot_metrics)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:  # report every failure as one JSON line
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
