"""Command-line entry points for the experiment suites."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .runner import EXPERIMENTS, ExperimentConfig, load_config, run, verify


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tricross",
        description="Critical-percolation crossing experiments on the triangle",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        cmd = sub.add_parser(name, help=f"run the {name} experiment")
        cmd.add_argument("--config", help="key=value experiment config file")
        cmd.add_argument("--seed", type=int, help="base seed (overrides config)")
        cmd.add_argument("--workers", type=int, help="worker processes")
        cmd.add_argument("--out", help="output file path")
        cmd.add_argument("--format", choices=("csv", "json"),
                         help="output format")
    check = sub.add_parser("verify", help="re-run a record and byte-compare")
    check.add_argument("record", help="path of a previously written record")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "verify":
        ok, message = verify(args.record)
        print(message)
        return 0 if ok else 1
    try:
        cfg = ExperimentConfig(experiment=args.command)
        if args.config:
            cfg = load_config(args.config, cfg)
        cfg = replace(cfg, experiment=args.command)
        overrides = {}
        for key in ("seed", "workers", "out", "format"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        if overrides:
            cfg = replace(cfg, **overrides)
        path = run(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
