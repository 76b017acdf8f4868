"""Evaluation results: metrics, dictionaries and denoising reports."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from himax.models.base import ArrayModel, as_float_array


class MetricsReport(BaseModel):
    """Coefficient entropy (bits) and conditional entropy (nats) at one epoch."""

    epoch: int = Field(ge=0)
    cfe_bits: float
    cde_nats: float
    population_n: float = Field(gt=0.0)
    samples: int = Field(ge=1)
    bandwidth_rule: Literal["silverman"] = "silverman"
    grid_bins: int
    margin: float
    reflect: bool = False
    wall_seconds: float = 0.0


class Dictionary(ArrayModel):
    """Basis vectors B, analysis filters W and display filters Cv, all K x K1."""

    B: np.ndarray
    W: np.ndarray
    Cv: np.ndarray

    @field_validator("B", "W", "Cv", mode="before")
    @classmethod
    def validate_matrix(cls, value, info):
        return as_float_array(value, 2, info.field_name)

    @model_validator(mode="after")
    def check_shapes(self) -> "Dictionary":
        if not self.B.shape == self.W.shape == self.Cv.shape:
            raise ValueError("B, W and Cv must share one shape")
        return self


class DenoiseReport(BaseModel):
    """Error norms of a denoising run against the clean original."""

    noisy_error: float = Field(ge=0.0)
    denoised_error: float = Field(ge=0.0)
    patch_width: int
    threshold: float
    k0: int
    k1: int

    @property
    def reduction(self) -> float:
        """Relative error reduction, 1 - denoised / noisy."""
        if self.noisy_error == 0.0:
            return 0.0
        return 1.0 - self.denoised_error / self.noisy_error
