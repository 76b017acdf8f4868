"""Shared fixtures and numerical helpers."""

import numpy as np
import pytest

from himax.models.images import ImageGray
from himax.services.manifold import gram_schmidt_rows
from himax.services.tuning import init_tuning


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


def finite_difference(fn, C: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of a matrix, entry by entry."""
    grad = np.zeros_like(C)
    for index in np.ndindex(C.shape):
        shift = np.zeros_like(C)
        shift[index] = step
        grad[index] = (fn(C + shift) - fn(C - shift)) / (2 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    return float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12))


def orthonormal_rows(rng: np.random.Generator, k0: int, k1: int) -> np.ndarray:
    return gram_schmidt_rows(rng.standard_normal((k0, k1)))


def texture(height: int, width: int, seed: int = 0) -> np.ndarray:
    """Smooth striped texture in [0, 1] with a little grain."""
    rows, cols = np.mgrid[0:height, 0:width].astype(np.float64)
    base = (
        0.5
        + 0.2 * np.sin(2 * np.pi * cols / 16.0)
        + 0.15 * np.sin(2 * np.pi * (rows + 0.5 * cols) / 23.0)
        + 0.1 * np.cos(2 * np.pi * rows / 9.0)
    )
    grain = 0.01 * np.random.default_rng(seed).standard_normal((height, width))
    return np.clip(base + grain, 0.0, 1.0)


@pytest.fixture
def texture_image() -> ImageGray:
    return ImageGray(pixels=texture(64, 64))


@pytest.fixture
def square_params():
    return init_tuning(3, 3)
