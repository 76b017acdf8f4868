"""JSON document repository for pydantic models."""

from pathlib import Path
from typing import Generic, TypeVar

from pydantic import BaseModel, ValidationError

from himax.errors import FormatError
from himax.repositories.base import BaseRepository, atomic_write

T = TypeVar("T", bound=BaseModel)


class JsonRepository(BaseRepository[T], Generic[T]):
    """Repository that stores one model per JSON file."""

    def __init__(self, model_class: type[T]):
        """
        Initialize the JSON repository.

        Args:
            model_class: The Pydantic model class for deserialization
        """
        self.model_class = model_class

    def load(self, path: Path) -> T:
        """Read and validate a document."""
        try:
            return self.model_class.model_validate_json(self.read_bytes(path))
        except ValidationError as exc:
            raise FormatError(f"{path}: not a valid {self.model_class.__name__}: {exc}") from exc

    def save(self, entity: T, path: Path) -> Path:
        """Write a document atomically."""
        return atomic_write(path, entity.model_dump_json(indent=2).encode("utf-8") + b"\n")
