"""Command-line benchmark runner.

Usage::

    bench run --experiment exp1 [--config FILE] [--scale R] [--seed N]
              [--out DIR] [--algorithms LIST] [--schedule NAME|LIST]
              [--threads K] [--trials N] [--problem FILE.sdp]

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 input/output error.
"""

from __future__ import annotations

import argparse
import sys

from .config import (
    EXPERIMENTS,
    KEY_HELP,
    apply_overrides,
    default_config,
    load_config,
    parse_schedule_arg,
)
from .exceptions import ConfigError, SdpFormatError, SpardecError
from .experiments import run_experiment


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad flags as config errors (exit code 1)."""

    def error(self, message):
        raise ConfigError(message)


def _key_help_epilog() -> str:
    lines = ["config file keys (sections [common] and [<experiment>], "
             "overridden by flags):"]
    for key in sorted(KEY_HELP):
        lines.append(f"  {key:<16} {KEY_HELP[key]}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="bench",
        description="Sparse-recovery benchmark harness.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    run_p = sub.add_parser(
        "run",
        help="run one experiment and write CSV/.dat results",
        description="Run one experiment and write CSV/.dat results.",
        epilog=_key_help_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    run_p.add_argument("--experiment", required=True, choices=EXPERIMENTS,
                       help="which experiment to run")
    run_p.add_argument("--config", metavar="FILE",
                       help="key = value config file (see epilog)")
    run_p.add_argument("--scale", type=float, metavar="R",
                       help=KEY_HELP["scale"])
    run_p.add_argument("--seed", type=int, metavar="U64",
                       help=KEY_HELP["seed"])
    run_p.add_argument("--out", dest="output_dir", metavar="DIR",
                       help=KEY_HELP["output_dir"])
    run_p.add_argument("--algorithms", metavar="LIST",
                       help=KEY_HELP["algorithms"])
    run_p.add_argument("--schedule", metavar="NAME|LIST",
                       help=KEY_HELP["schedule"])
    run_p.add_argument("--threads", type=int, metavar="K",
                       help=KEY_HELP["threads"])
    run_p.add_argument("--trials", type=int, metavar="N",
                       help=KEY_HELP["trials"])
    run_p.add_argument("--problem", dest="problem_file", metavar="FILE",
                       help=KEY_HELP["problem_file"])
    return parser


def _config_from_args(args):
    if args.config is not None:
        config = load_config(args.config, args.experiment)
    else:
        config = default_config(args.experiment)
    overrides = {
        "scale": args.scale,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "threads": args.threads,
        "trials": args.trials,
        "problem_file": args.problem_file,
    }
    if args.algorithms is not None:
        overrides["algorithms"] = tuple(
            p for p in args.algorithms.replace(",", " ").split() if p)
    if args.schedule is not None:
        overrides["schedule"] = parse_schedule_arg(args.schedule)
    return apply_overrides(config, **overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("bench: a command is required (try 'bench run --help')",
                  file=sys.stderr)
            return 1
        config = _config_from_args(args)
        written = run_experiment(config)
    except ConfigError as exc:
        print(f"bench: config error: {exc}", file=sys.stderr)
        return 1
    except (SdpFormatError, OSError) as exc:
        print(f"bench: i/o error: {exc}", file=sys.stderr)
        return 3
    except SpardecError as exc:
        print(f"bench: solver error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
