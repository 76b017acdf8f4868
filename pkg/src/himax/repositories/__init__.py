"""Repository layer for file persistence."""

from himax.repositories.base import BaseRepository, atomic_write, file_digest
from himax.repositories.bundle_repository import CheckpointRepository, WhiteningRepository
from himax.repositories.csv_repository import CsvRepository
from himax.repositories.json_repository import JsonRepository
from himax.repositories.matrix_repository import MatrixRepository, PatchMatrixRepository

__all__ = [
    "BaseRepository",
    "CheckpointRepository",
    "CsvRepository",
    "JsonRepository",
    "MatrixRepository",
    "PatchMatrixRepository",
    "WhiteningRepository",
    "atomic_write",
    "file_digest",
]
