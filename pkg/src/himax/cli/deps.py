"""Shared helpers for the CLI subcommands."""

import logging
import time
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

from pydantic import BaseModel, ValidationError

from himax.errors import UsageError
from himax.models.manifest import RunManifest
from himax.models.training import EvaluationOptions, TrainConfig
from himax.repositories import JsonRepository, file_digest

logger = logging.getLogger(__name__)

manifest_repo = JsonRepository[RunManifest](RunManifest)


class StageTimer:
    """Collects wall-clock seconds per named stage."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - started


def train_config(options) -> TrainConfig:
    """Build the training configuration from train or denoise options."""
    try:
        return TrainConfig(
            algorithm=options.alg,
            t_max=options.epochs,
            t0=options.t0,
            v1=options.v1,
            tau=options.tau,
            seed=options.seed,
            train_bias=options.train_bias,
            batch_size=options.batch_size,
            max_backtracks=options.max_backtracks,
            evaluation=EvaluationOptions(n_jobs=options.threads),
        )
    except ValidationError as exc:
        raise UsageError(validation_message(exc)) from exc


def sibling(path: Path, name: str) -> Path:
    """A file next to ``path``."""
    return Path(path).parent / name


def write_manifest(
    command: str,
    options: BaseModel,
    inputs: list[Path],
    outputs: list[Path],
    timer: StageTimer,
    path: Path,
    seed: int | None = None,
) -> RunManifest:
    """Record a completed run next to its artifacts."""
    manifest = RunManifest(
        command=command,
        options=options.model_dump(mode="json"),
        inputs={str(p): file_digest(p) for p in inputs},
        outputs=[str(p) for p in outputs],
        seed=seed,
        timings=timer.timings,
    )
    manifest_repo.save(manifest, path)
    logger.info("Wrote manifest %s", path)
    return manifest


def validation_message(exc: ValidationError) -> str:
    """One-line summary of an option validation failure."""
    error = exc.errors()[0]
    location = ".".join(str(part) for part in error["loc"]) or "options"
    return f"{location}: {error['msg']}"
