"""Bundle files: a JSON header followed by raw matrix blocks.

Layout: 4-byte magic, u32 LE header length, UTF-8 JSON header, then one
double-precision mat1 block per stored matrix.
"""

import json
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from himax.errors import FormatError, LengthError
from himax.models.training import Algorithm, Checkpoint, FilterBank
from himax.models.tuning import TuningParams
from himax.models.whitening import WhiteningModel
from himax.repositories.base import BaseRepository, atomic_write
from himax.repositories.matrix_repository import DOUBLE, decode_matrix, encode_matrix

LENGTH = struct.Struct("<I")


def pack_bundle(magic: bytes, header: dict, matrices: list[np.ndarray]) -> bytes:
    """Serialize a header and matrices into one bundle."""
    text = json.dumps(header, sort_keys=True).encode("utf-8")
    parts = [magic, LENGTH.pack(len(text)), text]
    parts.extend(encode_matrix(matrix, DOUBLE) for matrix in matrices)
    return b"".join(parts)


def unpack_bundle(buffer: bytes, magic: bytes, count: int) -> tuple[dict, list[np.ndarray]]:
    """Parse a bundle holding exactly ``count`` matrices."""
    if buffer[:4] != magic:
        raise FormatError(f"expected magic {magic!r}, found {buffer[:4]!r}")
    if len(buffer) < 8:
        raise LengthError("bundle header is truncated")
    (length,) = LENGTH.unpack_from(buffer, 4)
    offset = 8 + length
    if offset > len(buffer):
        raise LengthError("bundle header is truncated")
    try:
        header = json.loads(buffer[8:offset].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bundle header is not valid JSON: {exc}") from exc

    matrices = []
    for _ in range(count):
        matrix, offset = decode_matrix(buffer, offset)
        matrices.append(matrix)
    if offset != len(buffer):
        raise LengthError(f"{len(buffer) - offset} trailing bytes after bundle")
    return header, matrices


class CheckpointRepository(BaseRepository[Checkpoint]):
    """Checkpoint bundle: training header plus C."""

    magic = b"PICK"

    def load(self, path: Path) -> Checkpoint:
        header, (filters,) = unpack_bundle(self.read_bytes(path), self.magic, 1)
        try:
            return Checkpoint(
                filters=FilterBank(C=filters),
                params=TuningParams.model_validate(header["params"]),
                epoch=header["epoch"],
                rate_factor=header["rate_factor"],
                algorithm=Algorithm(header["algorithm"]),
            )
        except (KeyError, ValueError, ValidationError) as exc:
            raise FormatError(f"{path}: invalid checkpoint header: {exc}") from exc

    def save(self, entity: Checkpoint, path: Path) -> Path:
        header = {
            "k0": entity.filters.k0,
            "k1": entity.filters.k1,
            "epoch": entity.epoch,
            "beta": entity.params.beta,
            "bias": entity.params.bias,
            "rate_factor": entity.rate_factor,
            "algorithm": entity.algorithm.value,
            "params": entity.params.model_dump(),
        }
        return atomic_write(path, pack_bundle(self.magic, header, [entity.filters.C]))


class WhiteningRepository(BaseRepository[WhiteningModel]):
    """Whitening bundle: (K, K0, epsilon) header plus mean, U and spectrum."""

    magic = b"PIWM"

    def load(self, path: Path) -> WhiteningModel:
        header, (mean, eigvecs, spectrum) = unpack_bundle(self.read_bytes(path), self.magic, 3)
        try:
            return WhiteningModel(
                mean=mean.ravel(),
                eigvecs=eigvecs,
                spectrum=spectrum.ravel(),
                retained_rank=header["k0"],
                threshold=header["epsilon"],
            )
        except (KeyError, ValidationError) as exc:
            raise FormatError(f"{path}: invalid whitening bundle: {exc}") from exc

    def save(self, entity: WhiteningModel, path: Path) -> Path:
        header = {
            "k": entity.dimension,
            "k0": entity.retained_rank,
            "epsilon": entity.threshold,
        }
        blocks = [entity.mean[:, None], entity.eigvecs, entity.spectrum[:, None]]
        return atomic_write(path, pack_bundle(self.magic, header, blocks))
