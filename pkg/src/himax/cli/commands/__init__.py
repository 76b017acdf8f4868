"""Subcommands; each module exposes NAME, OPTIONS, add_parser and run."""

from himax.cli.commands import denoise, export, metrics, replay, sample, train

COMMANDS = {module.NAME: module for module in (sample, train, metrics, export, denoise, replay)}

__all__ = ["COMMANDS"]
