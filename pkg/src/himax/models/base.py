"""Base model for entities that carry numpy arrays."""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict


class ArrayModel(BaseModel):
    """Immutable model whose array fields are float64 numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def as_float_array(value: Any, ndim: int, name: str) -> np.ndarray:
    """Coerce a value into a finite float64 array with the given rank.

    Raises:
        ValueError: If the rank is wrong or an entry is not finite.
    """
    array = np.asarray(value, dtype=np.float64)
    if array.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ValueError(f"{name} contains non-finite entries")
    return array
