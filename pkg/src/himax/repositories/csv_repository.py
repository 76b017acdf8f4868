"""CSV tables of pydantic row models (training history, metrics)."""

import csv
import io
from pathlib import Path
from typing import Generic, TypeVar

from pydantic import BaseModel, ValidationError

from himax.errors import FormatError
from himax.repositories.base import BaseRepository, atomic_write

T = TypeVar("T", bound=BaseModel)


class CsvRepository(BaseRepository[list[T]], Generic[T]):
    """Repository that stores a list of rows as one CSV file."""

    def __init__(self, model_class: type[T], columns: list[str] | None = None):
        """
        Initialize the CSV repository.

        Args:
            model_class: The Pydantic row model
            columns: Columns to write, in order (defaults to all model fields)
        """
        self.model_class = model_class
        self.columns = columns or list(model_class.model_fields)

    def load(self, path: Path) -> list[T]:
        """Read all rows."""
        text = self.read_bytes(path).decode("utf-8")
        reader = csv.DictReader(io.StringIO(text))
        try:
            return [self.model_class.model_validate(record) for record in reader]
        except ValidationError as exc:
            raise FormatError(f"{path}: invalid row: {exc}") from exc

    def save(self, entity: list[T], path: Path) -> Path:
        """Write all rows atomically."""
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=self.columns, extrasaction="ignore",
                                lineterminator="\n")
        writer.writeheader()
        for row in entity:
            writer.writerow(row.model_dump(mode="json"))
        return atomic_write(path, buffer.getvalue().encode("utf-8"))
