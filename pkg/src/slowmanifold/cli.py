"""Command-line entry point: ``slowmanifold <command> [flags]``.

Exit status 0 on success, 1 on a configuration error, 2 on a numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import ConfigError, NumericalFailure
from .experiments import parse_config, run_command

COMMANDS = ("example1", "example2", "manifold", "tracking", "approx-order", "diagnostics",
            "simulate")

log = logging.getLogger("slowmanifold")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slowmanifold",
                                     description="Random slow manifolds of fast-slow systems "
                                                 "driven by stable Levy noise.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="YAML or JSON configuration file")
    # kept as strings so that malformed values surface as config errors with a key
    parser.add_argument("--epsilon")
    parser.add_argument("--alpha")
    parser.add_argument("--seed", help="single seed or comma-separated list")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--dt")
    parser.add_argument("--modes")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {"epsilon": args.epsilon, "alpha": args.alpha, "seeds": args.seed,
                 "out": args.out, "dt": args.dt, "n_modes": args.modes}
    if args.command in ("example1", "example2"):
        overrides["example"] = args.command[-1]
    try:
        cfg = parse_config(args.config, overrides)
        manifest = run_command(args.command, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    log.info("wrote %s", manifest)
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
