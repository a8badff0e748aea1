import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Sequence

from src.cli.config import PRESETS, SCHEMA, read_config_file, resolve_config
from src.cli.experiments import RUNNERS
from src.cli.output import error_record, failure_record, write_result
from src.cli.types import OutputFormat, Subcommand
from src.common.errors import (
    BelltimeError,
    CapacityError,
    DomainError,
    PreconditionError,
    UsageError,
    ValidationError,
)
from src.common.logs import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

# bad parameter values surface as usage errors at the command line
_INPUT_ERRORS = (UsageError, ValidationError, DomainError, CapacityError, PreconditionError)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=12345, help="master seed")
    common.add_argument("--out", type=Path, default=None, help="output file (default: stdout)")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
    common.add_argument("--preset", choices=sorted(PRESETS), default=None, help="named parameter set")
    common.add_argument("--config", type=Path, default=None, help="key=value parameter file")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")

    parser = argparse.ArgumentParser(
        prog="run_belltime.py",
        description="Bell correlations with spacetime structure: CHSH, local models, detector geometry, free fields.",
    )
    subparsers = parser.add_subparsers(dest="subcommand", required=True)
    for command, schema in SCHEMA.items():
        sub = subparsers.add_parser(command.value, parents=[common])
        for key, param in schema.items():
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None, metavar="VALUE", help=param.help)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    subcommand = Subcommand(args.subcommand)
    overrides = {key: getattr(args, key) for key in SCHEMA[subcommand] if getattr(args, key) is not None}
    try:
        config = resolve_config(
            subcommand,
            preset=args.preset,
            file_values=read_config_file(args.config) if args.config else None,
            overrides=overrides,
            seed=args.seed,
            fmt=OutputFormat(args.format),
            out=args.out,
        )
        logger.info("[CLI] %s with seed %d", subcommand.value, config.seed)
        started = time.perf_counter()
        result = RUNNERS[subcommand](config)
        write_result(result, config, time.perf_counter() - started)
    except _INPUT_ERRORS as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_USAGE
    except BelltimeError as exc:
        print(error_record(exc), file=sys.stderr)
        return EXIT_RUNTIME

    if not result.passed:
        print(failure_record(result, config), file=sys.stderr)
        return EXIT_CHECKS_FAILED
    logger.info("[CLI] %d checks passed", len(result.checks))
    return EXIT_OK
