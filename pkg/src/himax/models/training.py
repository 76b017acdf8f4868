"""Training configuration, filter bank and optimizer state."""

from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from himax.config import settings
from himax.models.base import ArrayModel, as_float_array
from himax.models.tuning import TuningParams


class Algorithm(str, Enum):
    """Training objective family."""

    ALG1 = "alg1"  # square, orthonormal then unconstrained Q2
    ALG2 = "alg2"  # overcomplete determinant surrogate
    EXACT = "exact"  # per-sample reference objective
    AUTO = "auto"

    def resolve(self, k0: int, k1: int) -> "Algorithm":
        """Pick alg1 for square problems and alg2 otherwise when set to auto."""
        if self is not Algorithm.AUTO:
            return self
        return Algorithm.ALG1 if k0 == k1 else Algorithm.ALG2


class StepStatus(str, Enum):
    """Outcome of one training epoch."""

    ACCEPTED = "accepted"
    CONVERGED = "converged"
    STALLED = "stalled"
    HELD = "held"


class EvaluationOptions(BaseModel):
    """How objective evaluations are partitioned and guarded."""

    n_jobs: int = Field(default_factory=lambda: settings.threads, ge=1)
    block_size: int = Field(default_factory=lambda: settings.block_size, ge=1)
    saturation_tolerance: float = Field(
        default_factory=lambda: settings.saturation_tolerance, ge=0.0, le=1.0,
        description="Largest tolerated fraction of floored tuning values",
    )


class TrainConfig(BaseModel):
    """Settings of one training run."""

    algorithm: Algorithm = Algorithm.AUTO
    t_max: int = Field(default=300, ge=1, description="Number of epochs")
    t0: int = Field(default=50, ge=1, description="Length of the orthonormal phase")
    v1: float = Field(default=0.4, gt=0.0, lt=1.0, description="Initial rate factor")
    tau: float = Field(default=0.8, gt=0.0, lt=1.0, description="Backtracking factor")
    seed: int = Field(default=0, ge=0, lt=2**64)
    train_bias: bool = False
    batch_size: int | None = Field(default=None, ge=1, description="None means full batch")
    max_backtracks: int = Field(default_factory=lambda: settings.max_backtracks, ge=1)
    evaluation: EvaluationOptions = Field(default_factory=EvaluationOptions)

    @model_validator(mode="after")
    def check_phases(self) -> "TrainConfig":
        if self.t0 > self.t_max:
            raise ValueError(f"t0={self.t0} exceeds t_max={self.t_max}")
        return self


class FilterBank(ArrayModel):
    """The K0 x K1 filter matrix C."""

    C: np.ndarray

    @field_validator("C", mode="before")
    @classmethod
    def validate_matrix(cls, value):
        return as_float_array(value, 2, "C")

    @property
    def k0(self) -> int:
        return self.C.shape[0]

    @property
    def k1(self) -> int:
        return self.C.shape[1]

    def orthonormality_error(self) -> float:
        """Frobenius norm of C C^T - I."""
        return float(np.linalg.norm(self.C @ self.C.T - np.eye(self.k0)))

    def smallest_singular_value(self) -> float:
        return float(np.linalg.svd(self.C, compute_uv=False).min())


class HistoryEntry(BaseModel):
    """One row of the training history."""

    epoch: int
    phase: int
    objective: float
    step: float
    backtracks: int
    status: StepStatus
    beta: float
    bias: float
    wall_seconds: float


class TrainState(BaseModel):
    """Mutable optimizer state carried across epochs."""

    epoch: int = 0
    rate_factor: float = Field(description="v_t")
    step: float = Field(default=0.0, description="mu_t of the last accepted step")
    objective: float | None = None
    backtracks: int = 0
    algorithm: Algorithm = Algorithm.ALG1
    params: TuningParams | None = None
    history: list[HistoryEntry] = Field(default_factory=list)
    stalled_phases: list[int] = Field(
        default_factory=list, description="Phases whose line search stalled, in order"
    )

    def phase_objectives(self, phase: int) -> list[float]:
        """Objective values recorded during one phase."""
        return [entry.objective for entry in self.history if entry.phase == phase]


class Checkpoint(ArrayModel):
    """Everything needed to resume or analyze a trained filter bank."""

    filters: FilterBank
    params: TuningParams
    epoch: int = Field(ge=0)
    rate_factor: float
    algorithm: Algorithm
