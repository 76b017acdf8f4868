"""Abstract file repository interface and atomic writes."""

import hashlib
import os
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Generic, TypeVar

from himax.errors import DataError

T = TypeVar("T")


class BaseRepository(ABC, Generic[T]):
    """Abstract repository reading and writing one entity per file."""

    @abstractmethod
    def load(self, path: Path) -> T:
        """Read an entity from a file."""
        pass

    @abstractmethod
    def save(self, entity: T, path: Path) -> Path:
        """Write an entity to a file atomically. Returns the path written."""
        pass

    @staticmethod
    def read_bytes(path: Path) -> bytes:
        """Read a whole file, mapping a missing file to a data error."""
        try:
            return Path(path).read_bytes()
        except FileNotFoundError as exc:
            raise DataError(f"no such file: {path}") from exc
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc.strerror}") from exc


def atomic_write(path: Path, payload: bytes) -> Path:
    """Write bytes to a sibling temp file, then rename it over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def file_digest(path: Path) -> str:
    """SHA-256 hex digest of a file."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
