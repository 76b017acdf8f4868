"""Blockwise evaluation over sample columns with an ordered reduction."""

from collections.abc import Callable
from typing import TypeVar

import numpy as np
from joblib import Parallel, delayed

from himax.models.training import EvaluationOptions

R = TypeVar("R")


def column_blocks(m: int, block_size: int) -> list[slice]:
    """Consecutive column slices of at most block_size columns."""
    return [slice(start, min(start + block_size, m)) for start in range(0, m, block_size)]


def map_blocks(
    fn: Callable[[slice], R],
    m: int,
    options: EvaluationOptions,
    block_size: int | None = None,
) -> list[R]:
    """Apply fn to every column block, returning results in block order.

    The partition depends only on the block size, so results summed in the
    returned order are identical for any number of workers.
    """
    blocks = column_blocks(m, block_size or options.block_size)
    if options.n_jobs == 1 or len(blocks) == 1:
        return [fn(block) for block in blocks]
    return Parallel(n_jobs=options.n_jobs, prefer="threads")(
        delayed(fn)(block) for block in blocks
    )


def ordered_sum(parts: list[np.ndarray | float]) -> np.ndarray | float:
    """Sum partial results left to right."""
    total = parts[0]
    for part in parts[1:]:
        total = total + part
    return total
