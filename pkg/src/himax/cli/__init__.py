"""Command-line interface: sample, train, metrics, export, denoise and replay."""

from himax.cli.main import main, run_command

__all__ = ["main", "run_command"]
