"""Whitening model: eigenbasis, spectrum and retained rank."""

from enum import Enum

import numpy as np
from pydantic import Field, field_validator, model_validator

from himax.models.base import ArrayModel, as_float_array


class WhiteningMode(str, Enum):
    """Output basis of a whitening transform."""

    WHITEN = "whiten"
    ZCA = "zca"


def energy_ratios(spectrum: np.ndarray) -> np.ndarray:
    """Square root of the cumulative energy fraction of a variance spectrum."""
    cumulative = np.cumsum(spectrum)
    return np.sqrt(cumulative / cumulative[-1])


class WhiteningModel(ArrayModel):
    """Eigendecomposition of the patch covariance plus the retained rank K0."""

    mean: np.ndarray
    eigvecs: np.ndarray = Field(description="K x K orthogonal U, columns by descending variance")
    spectrum: np.ndarray = Field(description="Variances, positive and non-increasing")
    retained_rank: int = Field(ge=1, description="K0")
    threshold: float = Field(gt=0.0, le=1.0, description="Energy threshold epsilon")

    @field_validator("mean", "spectrum", mode="before")
    @classmethod
    def validate_vector(cls, value, info):
        return as_float_array(value, 1, info.field_name)

    @field_validator("eigvecs", mode="before")
    @classmethod
    def validate_eigvecs(cls, value):
        return as_float_array(value, 2, "eigvecs")

    @model_validator(mode="after")
    def check_consistency(self) -> "WhiteningModel":
        k = self.spectrum.shape[0]
        if self.mean.shape != (k,) or self.eigvecs.shape != (k, k):
            raise ValueError("mean, eigvecs and spectrum disagree on the dimension")
        if np.any(self.spectrum <= 0.0):
            raise ValueError("spectrum must be strictly positive")
        if np.any(np.diff(self.spectrum) > 0.0):
            raise ValueError("spectrum must be non-increasing")
        if self.retained_rank > k:
            raise ValueError(f"retained rank {self.retained_rank} exceeds dimension {k}")

        ratios = energy_ratios(self.spectrum)
        k0 = self.retained_rank
        if ratios[k0 - 1] < self.threshold or (k0 > 1 and ratios[k0 - 2] >= self.threshold):
            raise ValueError(f"retained rank {k0} does not match threshold {self.threshold}")
        return self

    @property
    def dimension(self) -> int:
        """Patch dimension K."""
        return self.spectrum.shape[0]

    @property
    def u0(self) -> np.ndarray:
        """Leading K0 eigenvectors."""
        return self.eigvecs[:, : self.retained_rank]

    @property
    def sigma0(self) -> np.ndarray:
        """Leading K0 variances."""
        return self.spectrum[: self.retained_rank]

    def with_rank(self, k0: int) -> "WhiteningModel":
        """Copy retaining exactly k0 components.

        The threshold is set to the energy ratio reached at k0, so the
        rank/threshold consistency check still holds.
        """
        if not 1 <= k0 <= self.dimension:
            raise ValueError(f"rank {k0} outside [1, {self.dimension}]")
        threshold = float(energy_ratios(self.spectrum)[k0 - 1])
        return WhiteningModel(
            mean=self.mean,
            eigvecs=self.eigvecs,
            spectrum=self.spectrum,
            retained_rank=k0,
            threshold=min(threshold, 1.0),
        )
