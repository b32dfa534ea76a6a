"""``hold-mia`` command-line entry point."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path

from ..utils.logging import configure_logging
from .endpoints import CommandRequest, default_router
from .middleware import ErrorMiddleware, LoggingMiddleware, MiddlewareChain
from .serializers import to_json

# flags that are shorthands for --set overrides of ExperimentConfig fields
CONFIG_FLAGS = {
    "output_dir": "output_dir",
    "seed_base": "seed_base",
    "repeats": "repeats",
    "workers": "workers",
    "epochs": "train.epochs",
}


def _add_process_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--order", type=int, help="model order n (default: first grid value)"
    )
    parser.add_argument("--beta", type=float, help="auxiliary variance factor")
    parser.add_argument(
        "--eps-num", dest="eps_num", type=float, help="data-block variance"
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="YAML experiment config")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config field, e.g. --set train.epochs=100 (repeatable)",
    )
    common.add_argument("--output-dir", dest="output_dir", type=Path)
    common.add_argument("--seed-base", dest="seed_base", type=int)
    common.add_argument("--log-level", dest="log_level", default=None)
    common.add_argument("--log-format", dest="log_format", choices=["json", "console"])

    parser = argparse.ArgumentParser(
        prog="hold-mia",
        description=(
            "HOLD++ diffusion training, membership inference and privacy accounting."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate-data", parents=[common], help="write spiral data and its split"
    )
    gen.add_argument("--out-dir", dest="out_dir", type=Path)

    tr = sub.add_parser("train", parents=[common], help="train a score network")
    tr.add_argument("--members", type=Path, required=True, help="training data CSV")
    tr.add_argument("--checkpoint", type=Path, help="output checkpoint (.npz)")
    tr.add_argument("--epochs", type=int)
    _add_process_flags(tr)

    at = sub.add_parser(
        "attack", parents=[common], help="run the membership inference attack"
    )
    at.add_argument("--checkpoint", type=Path, required=True)
    at.add_argument("--members", type=Path, required=True)
    at.add_argument("--holdouts", type=Path, required=True)
    at.add_argument("--out-dir", dest="out_dir", type=Path)

    pr = sub.add_parser(
        "privacy-report", parents=[common], help="Renyi-DP sensitivity curve"
    )
    source = pr.add_mutually_exclusive_group(required=True)
    source.add_argument(
        "--data", type=Path, help="dataset CSV; its squared diameter is used"
    )
    source.add_argument("--delta2f", type=float, help="squared data diameter")
    pr.add_argument("--alpha", type=float)
    pr.add_argument("--out-dir", dest="out_dir", type=Path)
    _add_process_flags(pr)

    sw = sub.add_parser("sweep", parents=[common], help="run the full experiment grid")
    sw.add_argument("--repeats", type=int)
    sw.add_argument("--workers", type=int)

    pl = sub.add_parser(
        "plot", parents=[common], help="emit figures from results.jsonl"
    )
    pl.add_argument("--results", type=Path)
    pl.add_argument("--out-dir", dest="out_dir", type=Path)

    return parser


def build_request(args: argparse.Namespace) -> CommandRequest:
    options = {
        k: v
        for k, v in vars(args).items()
        if k not in {"command", "config", "overrides", "log_level", "log_format"}
    }
    overrides = list(args.overrides)
    for flag, key in CONFIG_FLAGS.items():
        value = options.pop(flag, None)
        if value is not None:
            overrides.append(f"{key}={value}")
    return CommandRequest(
        command=args.command,
        options=options,
        config_path=args.config,
        overrides=overrides,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Parse, run one command and print its JSON result; returns the exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or "INFO", args.log_format or "json")
    handler = (
        MiddlewareChain(default_router())
        .add(ErrorMiddleware)
        .add(LoggingMiddleware)
        .build()
    )
    result = handler.handle(build_request(args))
    sys.stdout.write(to_json(result.body) + "\n")
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
