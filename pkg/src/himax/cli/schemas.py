"""Validated option sets of the CLI subcommands.

Each schema receives the merged options (flags over config file over
defaults); unknown keys are rejected.
"""

from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator

from himax.config import settings
from himax.models.training import Algorithm


class CommandOptions(BaseModel):
    """Options shared by every subcommand."""

    model_config = ConfigDict(extra="forbid")

    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    log_level: str = Field(default_factory=lambda: settings.log_level)

    @field_validator("log_level")
    @classmethod
    def known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level {value!r}")
        return level


# Sampling
class SampleOptions(CommandOptions):
    """Images to patch matrix."""

    images: list[Path] = Field(min_length=1)
    output: Path
    patch_width: int = Field(default=12, ge=1)
    count: int = Field(default=100_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("images", mode="before")
    @classmethod
    def split_paths(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value


# Training
class TrainingKnobs(CommandOptions):
    """Optimizer settings shared by train and denoise."""

    epochs: int = Field(default=300, ge=1)
    t0: int = Field(default=50, ge=1)
    v1: float = Field(default=0.4, gt=0.0, lt=1.0)
    tau: float = Field(default=0.8, gt=0.0, lt=1.0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    alg: Algorithm = Algorithm.AUTO
    train_bias: bool = False
    batch_size: int | None = Field(default=None, ge=1)
    max_backtracks: int = Field(default_factory=lambda: settings.max_backtracks, ge=1)


class TrainOptions(TrainingKnobs):
    """Patch matrix to checkpoint, history, filters and metrics."""

    patches: Path
    out_dir: Path = Path("run")
    k1: int = Field(default=144, ge=1)
    epsilon: float = Field(default=1.0, gt=0.0, le=1.0)
    k0: int | None = Field(default=None, ge=1, description="Fixed rank; overrides epsilon")
    metrics_every: int = Field(default_factory=lambda: settings.metrics_every, ge=0)
    metrics_samples: int = Field(default_factory=lambda: settings.metrics_samples, ge=100)
    n: float = Field(default_factory=lambda: settings.population_n, gt=0.0)


# Evaluation
class MetricsOptions(CommandOptions):
    """Checkpoint and patches to a CFE/CDE row."""

    checkpoint: Path
    patches: Path
    whitening: Path | None = None
    output: Path = Path("metrics.csv")
    n: float = Field(default_factory=lambda: settings.population_n, gt=0.0)
    samples: int | None = Field(default=None, ge=100)
    reflect: bool = False


class ExportOptions(CommandOptions):
    """Checkpoint to filter grids and raw matrices."""

    checkpoint: Path
    whitening: Path | None = None
    out_dir: Path = Path("export")


# Denoising
class DenoiseOptions(TrainingKnobs):
    """Clean and noisy images to a denoised image."""

    clean: Path
    noisy: Path
    output: Path
    original: Path | None = None
    patch_width: int = Field(default=7, ge=2)
    epsilon: float = Field(default=0.975, gt=0.0, le=1.0)
    k1: int | None = Field(default=None, ge=1)
    patch_count: int = Field(default=20_000, ge=2)


class ReplayOptions(CommandOptions):
    """Re-run a recorded command."""

    manifest: Path
