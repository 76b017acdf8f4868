"""Runtime settings and key=value config files."""

import logging
from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict

from himax.errors import UsageError


class Settings(BaseSettings):
    """Defaults loaded from HIMAX_* environment variables or a .env file."""

    model_config = SettingsConfigDict(
        env_prefix="HIMAX_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Execution
    threads: int = 1
    block_size: int = 4096
    log_level: str = "INFO"

    # Training guards
    saturation_tolerance: float = 0.01
    max_backtracks: int = 60
    exact_limit: int = 1_000_000

    # Metrics
    kde_grid_bins: int = 512
    kde_margin: float = 3.0
    metrics_every: int = 10
    metrics_samples: int = 20_000
    population_n: float = 1e6

    # Optional datasets for the parity tests
    olshausen_images: Path | None = None
    mnist_images: Path | None = None


settings = Settings()


def read_key_value_file(path: Path) -> dict[str, str]:
    """Parse a flat key=value config file.

    Blank lines and lines starting with '#' are skipped. Keys are normalized
    so that 'patch-width' and 'patch_width' name the same option.

    Raises:
        UsageError: If the file is missing or a line has no '='.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from exc

    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    logging.getLogger(__name__).debug("Read %d option(s) from %s", len(values), path)
    return values
