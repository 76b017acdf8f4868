"""Images, patch matrices and patch sampling settings."""

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from himax.models.base import ArrayModel, as_float_array


class ImageGray(ArrayModel):
    """A grayscale image with intensities in [0, 1].

    Pixels are stored as a (height, width) array; ``intensities`` is its
    row-major flattening.
    """

    pixels: np.ndarray

    @field_validator("pixels", mode="before")
    @classmethod
    def validate_pixels(cls, value):
        pixels = as_float_array(value, 2, "pixels")
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValueError("intensities must lie in [0, 1]")
        return pixels

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def intensities(self) -> np.ndarray:
        """Row-major intensity vector."""
        return self.pixels.reshape(-1)


class PatchMatrix(ArrayModel):
    """K x M matrix whose columns are row-major vectorized w x w patches."""

    data: np.ndarray
    patch_width: int = Field(ge=1, description="Patch side length w, with K = w*w")

    @field_validator("data", mode="before")
    @classmethod
    def validate_data(cls, value):
        return as_float_array(value, 2, "data")

    @model_validator(mode="after")
    def check_geometry(self) -> "PatchMatrix":
        if self.data.shape[0] != self.patch_width**2:
            raise ValueError(
                f"patch dimension {self.data.shape[0]} is not {self.patch_width}^2"
            )
        return self

    @property
    def dimension(self) -> int:
        """Patch dimension K."""
        return self.data.shape[0]

    @property
    def sample_count(self) -> int:
        """Number of patches M."""
        return self.data.shape[1]


class SamplerConfig(BaseModel):
    """Settings for random patch sampling."""

    patch_width: int = Field(ge=1, description="Patch side length w")
    count: int = Field(ge=1, description="Number of patches M")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Generator seed")
