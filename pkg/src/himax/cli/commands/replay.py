"""replay: re-run a command from its manifest."""

import argparse
import logging

from pydantic import ValidationError

from himax.cli.deps import manifest_repo, validation_message
from himax.cli.schemas import ReplayOptions
from himax.errors import FormatError
from himax.models.manifest import RunManifest
from himax.repositories import file_digest

logger = logging.getLogger(__name__)

NAME = "replay"
OPTIONS = ReplayOptions


def add_parser(subparsers, parents: list[argparse.ArgumentParser]) -> None:
    parser = subparsers.add_parser(
        NAME, parents=parents, help="re-run a recorded command",
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument("--manifest", help="manifest.json written by an earlier run")


def run(options: ReplayOptions) -> RunManifest:
    from himax.cli.commands import COMMANDS

    recorded = manifest_repo.load(options.manifest)
    command = COMMANDS.get(recorded.command)
    if command is None or command.NAME == NAME:
        raise FormatError(f"{options.manifest}: cannot replay command {recorded.command!r}")
    try:
        replayed = command.OPTIONS.model_validate(recorded.options)
    except ValidationError as exc:
        raise FormatError(f"{options.manifest}: {validation_message(exc)}") from exc

    for path, digest in recorded.inputs.items():
        try:
            current = file_digest(path)
        except OSError:
            current = None
        if current != digest:
            logger.warning("Input %s changed since the recorded run", path)

    logger.info("Replaying %s from %s", recorded.command, options.manifest)
    return command.run(replayed)
