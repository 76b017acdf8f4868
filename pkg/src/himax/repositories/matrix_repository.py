"""Raw matrix files ("mat1").

Layout: magic ``PIMX``, one version byte, u32 LE rows, u32 LE cols, then
rows*cols little-endian IEEE-754 values in column-major order. Version 1
stores float32 values, version 2 float64.
"""

import logging
import math
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from himax.errors import FormatError, LengthError, ShapeError
from himax.models.images import PatchMatrix
from himax.repositories.base import BaseRepository, atomic_write

logger = logging.getLogger(__name__)

MAGIC = b"PIMX"
HEADER = struct.Struct("<4sBII")
DTYPES = {1: np.dtype("<f4"), 2: np.dtype("<f8")}
SINGLE = 1
DOUBLE = 2


def encode_matrix(matrix: np.ndarray, version: int = SINGLE) -> bytes:
    """Serialize a 2-D array."""
    if version not in DTYPES:
        raise ValueError(f"unknown matrix version {version}")
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {matrix.shape}")
    rows, cols = matrix.shape
    body = np.asarray(matrix, dtype=DTYPES[version]).tobytes(order="F")
    return HEADER.pack(MAGIC, version, rows, cols) + body


def decode_matrix(buffer: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Parse one matrix starting at ``offset``.

    Returns:
        Tuple of (float64 matrix, offset just past the matrix).
    """
    if len(buffer) - offset < HEADER.size:
        raise LengthError("matrix header is truncated")
    magic, version, rows, cols = HEADER.unpack_from(buffer, offset)
    if magic != MAGIC:
        raise FormatError(f"bad matrix magic {magic!r}")
    if version not in DTYPES:
        raise FormatError(f"unsupported matrix version {version}")

    dtype = DTYPES[version]
    start = offset + HEADER.size
    end = start + rows * cols * dtype.itemsize
    if end > len(buffer):
        raise LengthError(
            f"matrix payload needs {end - start} bytes, found {len(buffer) - start}"
        )
    values = np.frombuffer(buffer, dtype=dtype, count=rows * cols, offset=start)
    matrix = values.reshape((rows, cols), order="F").astype(np.float64)
    return matrix, end


class MatrixRepository(BaseRepository[np.ndarray]):
    """Stores bare matrices in single or double precision."""

    def __init__(self, version: int = SINGLE):
        self.version = version

    def load(self, path: Path) -> np.ndarray:
        buffer = self.read_bytes(path)
        matrix, end = decode_matrix(buffer)
        if end != len(buffer):
            raise LengthError(f"{path}: {len(buffer) - end} trailing bytes after matrix")
        return matrix

    def save(self, entity: np.ndarray, path: Path) -> Path:
        return atomic_write(path, encode_matrix(entity, self.version))


class PatchMatrixRepository(BaseRepository[PatchMatrix]):
    """Stores patch matrices; the patch width is recovered from K = w*w."""

    def __init__(self, version: int = SINGLE):
        self.matrices = MatrixRepository(version)

    def load(self, path: Path) -> PatchMatrix:
        data = self.matrices.load(path)
        width = math.isqrt(data.shape[0])
        if width * width != data.shape[0] or width == 0:
            raise ShapeError(f"{path}: {data.shape[0]} rows is not a square patch size")
        try:
            patches = PatchMatrix(data=data, patch_width=width)
        except ValidationError as exc:
            raise FormatError(f"{path}: {exc}") from exc
        logger.info("Loaded %d patches of %dx%d from %s", data.shape[1], width, width, path)
        return patches

    def save(self, entity: PatchMatrix, path: Path) -> Path:
        return self.matrices.save(entity.data, path)
