"""Command-line entry point."""

import argparse
import logging
import sys
from typing import Any

from pydantic import ValidationError

from himax import __version__
from himax.cli.commands import COMMANDS
from himax.cli.deps import validation_message
from himax.config import read_key_value_file, settings
from himax.errors import EXIT_DATA, HimaxError, UsageError

logger = logging.getLogger("himax")


class HimaxArgumentParser(argparse.ArgumentParser):
    """Parser that reports bad flags as a UsageError instead of exiting."""

    def error(self, message: str):
        raise UsageError(message)


def _build_arg_parser() -> argparse.ArgumentParser:
    common = HimaxArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key=value file; flags take precedence")
    common.add_argument("--threads", type=int, help="worker threads (default 1)")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = HimaxArgumentParser(
        prog="himax",
        description="Hierarchical infomax filter learning on image patches",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command in COMMANDS.values():
        command.add_parser(subparsers, [common])
    return parser


def configure_logging(level: str) -> None:
    """Send log records to stderr; stdout carries command results only."""
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def merge_options(namespace: argparse.Namespace) -> dict[str, Any]:
    """Explicit flags over config-file values over schema defaults."""
    flags = {key: value for key, value in vars(namespace).items() if key != "command"}
    config_path = flags.pop("config", None)
    merged: dict[str, Any] = read_key_value_file(config_path) if config_path else {}
    merged.update(flags)
    return merged


def run_command(argv: list[str]) -> int:
    """Parse, validate and run one subcommand; returns the process exit code."""
    try:
        namespace = _build_arg_parser().parse_args(argv)
        command = COMMANDS[namespace.command]
        try:
            options = command.OPTIONS.model_validate(merge_options(namespace))
        except ValidationError as exc:
            raise UsageError(validation_message(exc)) from exc
        configure_logging(options.log_level)
        logger.debug("Running %s with %s", command.NAME, options.model_dump(mode="json"))
        command.run(options)
    except HimaxError as exc:
        print(f"himax: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"himax: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        # --help and --version
        return exc.code if isinstance(exc.code, int) else 0
    return 0


def main() -> None:
    configure_logging(settings.log_level)
    sys.exit(run_command(sys.argv[1:]))
