"""Tuning parameters of the sigmoidal Poisson-neuron nonlinearity."""

import math

from pydantic import BaseModel, Field, computed_field

BETA0_FACTOR = 1.81


class TuningParams(BaseModel):
    """Slope, bias and population sizes of the tuning curve.

    The scale a and the reference slope beta0 are derived from the
    population sizes and are never stored independently.
    """

    model_config = {"frozen": True}

    beta: float = Field(gt=0.0, description="Current slope")
    bias: float = Field(default=0.0, description="Bias b")
    k0: int = Field(ge=1, description="Retained input rank K0")
    k1: int = Field(ge=1, description="Number of outputs K1")
    t0: int = Field(default=50, ge=0, description="Last epoch of the half-slope phase")

    @computed_field
    @property
    def scale(self) -> float:
        """a = sqrt(K1 / K0)."""
        return math.sqrt(self.k1 / self.k0)

    @computed_field
    @property
    def beta0(self) -> float:
        """Reference slope 1.81 * sqrt(K1 / K0)."""
        return BETA0_FACTOR * math.sqrt(self.k1 / self.k0)
