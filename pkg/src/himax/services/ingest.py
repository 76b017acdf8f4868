"""Image loading and random patch sampling."""

import gzip
import logging
import re
import struct
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from himax.errors import FormatError, GeometryError, LengthError
from himax.models.images import ImageGray, PatchMatrix, SamplerConfig
from himax.repositories.base import BaseRepository, atomic_write

logger = logging.getLogger(__name__)

IDX_IMAGE_MAGIC = 0x00000803
IDX_HEADER = struct.Struct(">IIII")
GZIP_MAGIC = b"\x1f\x8b"

# Magic, then width, height and maxval separated by whitespace or comments,
# then exactly one whitespace byte before the raster.
_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n\r]*[\n\r])*([^\s#]+)")


def _pgm_header(buffer: bytes) -> tuple[int, int, int, int]:
    """Parse a P5 header. Returns (width, height, maxval, raster offset)."""
    if buffer[:2] != b"P5":
        raise FormatError(f"unsupported PGM magic {buffer[:2]!r}; only binary P5 is read")
    offset = 2
    fields = []
    for _ in range(3):
        match = _PGM_TOKEN.match(buffer, offset)
        if match is None or not match.group(1).isdigit():
            raise FormatError("malformed PGM header")
        fields.append(int(match.group(1)))
        offset = match.end()
    if offset >= len(buffer) or buffer[offset : offset + 1] not in (b" ", b"\t", b"\n", b"\r"):
        raise FormatError("PGM header must end with a single whitespace byte")
    width, height, maxval = fields
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise FormatError(f"invalid PGM header values {width}x{height} maxval {maxval}")
    return width, height, maxval, offset + 1


def load_pgm(path: Path) -> ImageGray:
    """Load a binary (P5) PGM image with intensities scaled into [0, 1].

    Raises:
        FormatError: Bad magic or header.
        LengthError: Raster shorter than the header announces.
    """
    buffer = BaseRepository.read_bytes(path)
    width, height, maxval, offset = _pgm_header(buffer)

    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    needed = width * height * dtype.itemsize
    if len(buffer) - offset < needed:
        raise LengthError(f"{path}: raster needs {needed} bytes, found {len(buffer) - offset}")
    raster = np.frombuffer(buffer, dtype=dtype, count=width * height, offset=offset)
    if raster.max(initial=0) > maxval:
        raise FormatError(f"{path}: sample exceeds maxval {maxval}")

    pixels = raster.reshape(height, width).astype(np.float64) / maxval
    return ImageGray(pixels=pixels)


def write_pgm(image: ImageGray, path: Path, maxval: int = 255) -> Path:
    """Write an image as binary PGM, 8-bit or 16-bit depending on maxval."""
    if not 1 <= maxval <= 65535:
        raise ValueError(f"maxval {maxval} outside [1, 65535]")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    raster = np.rint(image.pixels * maxval).astype(dtype)
    header = f"P5\n{image.width} {image.height}\n{maxval}\n".encode("ascii")
    return atomic_write(path, header + raster.tobytes())


def load_idx_images(path: Path) -> list[ImageGray]:
    """Load an IDX image archive (plain or gzip-compressed).

    Raises:
        FormatError: Wrong magic number (e.g. a label file).
        LengthError: Payload size differs from count * rows * cols.
    """
    buffer = BaseRepository.read_bytes(path)
    if buffer[:2] == GZIP_MAGIC:
        try:
            buffer = gzip.decompress(buffer)
        except (OSError, EOFError) as exc:
            raise FormatError(f"{path}: corrupt gzip stream: {exc}") from exc

    if len(buffer) < IDX_HEADER.size:
        raise LengthError(f"{path}: IDX header is truncated")
    magic, count, rows, cols = IDX_HEADER.unpack_from(buffer, 0)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{path}: IDX magic {magic:#010x} is not an image archive")

    payload = len(buffer) - IDX_HEADER.size
    if payload != count * rows * cols:
        raise LengthError(f"{path}: expected {count * rows * cols} pixel bytes, found {payload}")

    raster = np.frombuffer(buffer, dtype=np.uint8, offset=IDX_HEADER.size)
    stack = raster.reshape(count, rows, cols).astype(np.float64) / 255.0
    logger.info("Loaded %d images of %dx%d from %s", count, rows, cols, path)
    return [ImageGray(pixels=pixels) for pixels in stack]


def load_images(paths: list[Path]) -> list[ImageGray]:
    """Load images from PGM files and IDX archives, detected by signature."""
    images: list[ImageGray] = []
    for path in paths:
        head = BaseRepository.read_bytes(path)[:4]
        if head[:2] == b"P5":
            images.append(load_pgm(path))
        elif head[:2] == GZIP_MAGIC or head == IDX_IMAGE_MAGIC.to_bytes(4, "big"):
            images.extend(load_idx_images(path))
        else:
            raise FormatError(f"{path}: neither a P5 PGM nor an IDX image archive")
    return images


def sample_patches(images: list[ImageGray], cfg: SamplerConfig) -> PatchMatrix:
    """Draw M patches uniformly over all (image, top-left corner) pairs.

    Sampling is with replacement. Columns are row-major vectorizations.

    Raises:
        GeometryError: If there are no images or one is smaller than w x w.
    """
    w = cfg.patch_width
    if not images:
        raise GeometryError("no images to sample from")
    for index, image in enumerate(images):
        if image.height < w or image.width < w:
            raise GeometryError(
                f"image {index} is {image.width}x{image.height}, smaller than patch {w}x{w}"
            )

    # Number of valid corners per image, laid end to end
    spans = np.array([image.width - w + 1 for image in images], dtype=np.int64)
    corners = np.array([(image.height - w + 1) for image in images], dtype=np.int64) * spans
    offsets = np.concatenate(([0], np.cumsum(corners)))

    rng = np.random.default_rng(cfg.seed)
    draws = rng.integers(0, offsets[-1], size=cfg.count)
    owners = np.searchsorted(offsets, draws, side="right") - 1

    data = np.empty((w * w, cfg.count), dtype=np.float64)
    for index in np.unique(owners):
        columns = np.flatnonzero(owners == index)
        local = draws[columns] - offsets[index]
        rows, cols = np.divmod(local, spans[index])
        windows = sliding_window_view(images[index].pixels, (w, w))
        data[:, columns] = windows[rows, cols].reshape(len(columns), w * w).T

    logger.debug("Sampled %d patches of %dx%d from %d image(s)", cfg.count, w, w, len(images))
    return PatchMatrix(data=data, patch_width=w)


def center(patches: PatchMatrix) -> tuple[PatchMatrix, np.ndarray]:
    """Subtract the row means.

    Returns:
        Tuple of (centered patches, mean vector).
    """
    mean = patches.data.mean(axis=1)
    centered = patches.data - mean[:, None]
    return PatchMatrix(data=centered, patch_width=patches.patch_width), mean
