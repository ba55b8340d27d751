"""Command line front end.

Subcommands: train, eval, compare-positioning, dump-trajectories.
Exit codes: 0 success, 2 configuration or contract errors, 3 numerical
divergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import (
    ConfigError,
    ContractError,
    SolverDivergenceError,
    TrainingDivergenceError,
)
from .experiments import (
    cmd_compare_positioning,
    cmd_dump_trajectories,
    cmd_eval,
    cmd_train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="usv-auv-sim",
        description="USV-assisted multi-AUV data-collection simulator",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", metavar="PATH", help="experiment config file")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", metavar="DIR", help="output directory")
        sp.add_argument("--sea", choices=["ideal", "extreme"], help="sea condition override")

    sp = sub.add_parser("train", help="train policies and write metrics + checkpoint")
    common(sp)
    sp.add_argument("--algo", choices=["ddpg", "sac"], help="learning algorithm override")
    sp.add_argument("--epochs", type=int, help="override the number of training epochs")

    sp = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    common(sp)
    sp.add_argument("--checkpoint", required=True, metavar="PATH")
    sp.add_argument("--episodes", type=int, default=20)

    sp = sub.add_parser("compare-positioning", help="three-way USV strategy comparison")
    common(sp)
    sp.add_argument("--episodes", type=int, default=100)

    sp = sub.add_parser("dump-trajectories", help="dump one greedy episode as CSV")
    common(sp)
    sp.add_argument("--checkpoint", required=True, metavar="PATH")
    return p


def _load(args, **extra):
    overrides = {"seed": getattr(args, "seed", None), "sea_condition": getattr(args, "sea", None)}
    overrides.update(extra)
    cfg = load_config(args.config, **overrides)
    out_dir = args.out if args.out else cfg.output_dir
    return cfg, out_dir


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            cfg, out = _load(args, algorithm=args.algo, epochs=args.epochs)
            _, lines = cmd_train(cfg, out)
        elif args.command == "eval":
            cfg, out = _load(args)
            _, _, lines = cmd_eval(cfg, args.checkpoint, args.episodes, out)
        elif args.command == "compare-positioning":
            cfg, out = _load(args)
            _, lines = cmd_compare_positioning(cfg, args.episodes, out)
        else:
            cfg, out = _load(args)
            _, lines = cmd_dump_trajectories(cfg, args.checkpoint, out)
    except (ConfigError, ContractError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverDivergenceError, TrainingDivergenceError) as e:
        print(f"numerical divergence: {e}", file=sys.stderr)
        if isinstance(e, TrainingDivergenceError) and e.context:
            print(f"context: {e.context}", file=sys.stderr)
        return EXIT_DIVERGENCE
    for ln in lines:
        print(ln)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
