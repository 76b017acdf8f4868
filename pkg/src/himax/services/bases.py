"""Basis vectors, analysis filters and filter-grid rendering."""

import logging
import math

import numpy as np
from scipy import linalg

from himax.errors import ConditioningError, GeometryError, ShapeError
from himax.models.analysis import Dictionary
from himax.models.images import ImageGray
from himax.models.training import FilterBank
from himax.models.tuning import TuningParams
from himax.models.whitening import WhiteningModel

logger = logging.getLogger(__name__)

SEPARATOR = 0.5


def extract_bases(model: WhiteningModel, C: FilterBank | np.ndarray,
                  params: TuningParams) -> Dictionary:
    """B = U0 S0^(1/2) (C C^T)^-1 C / a, W = a U0 S0^(-1/2) C and Cv = U0 C.

    Raises:
        ShapeError: C does not have K0 rows.
        ConditioningError: C C^T is singular.
    """
    C = C.C if isinstance(C, FilterBank) else np.asarray(C, dtype=np.float64)
    if C.shape[0] != model.retained_rank:
        raise ShapeError(f"C has {C.shape[0]} rows, the model keeps {model.retained_rank}")

    gram = C @ C.T
    eigenvalues = linalg.eigvalsh(gram)
    if eigenvalues[0] <= 1e-12 * eigenvalues[-1]:
        raise ConditioningError("C C^T is singular", eigenvalue=float(eigenvalues[0]))

    u0, root = model.u0, np.sqrt(model.sigma0)[:, None]
    a = params.scale
    B = u0 @ (root * linalg.solve(gram, C, assume_a="pos")) / a
    W = a * u0 @ (C / root)
    return Dictionary(B=B, W=W, Cv=u0 @ C)


def render_filter_grid(columns: np.ndarray, patch_width: int) -> ImageGray:
    """Tile K x K1 filter columns into a near-square grid image.

    Every column is scaled by its largest absolute entry and mapped from
    [-1, 1] to [0, 1]. Tiles are separated by 1-pixel lines at 0.5 gray;
    zero columns and unused grid slots render flat gray.
    """
    columns = np.asarray(columns, dtype=np.float64)
    w = patch_width
    if columns.ndim != 2 or columns.shape[0] != w * w:
        raise GeometryError(f"columns of length {columns.shape[0]} are not {w}x{w} patches")

    count = columns.shape[1]
    grid_cols = max(1, math.ceil(math.sqrt(count)))
    grid_rows = max(1, math.ceil(count / grid_cols))
    height = grid_rows * w + grid_rows - 1
    width = grid_cols * w + grid_cols - 1
    canvas = np.full((height, width), SEPARATOR)

    peaks = np.abs(columns).max(axis=0, initial=0.0)
    for k in range(count):
        if peaks[k] == 0.0:
            logger.warning("Filter %d is all zeros; rendered flat gray", k)
            tile = np.full((w, w), SEPARATOR)
        else:
            tile = (columns[:, k] / peaks[k] + 1.0).reshape(w, w) / 2.0
        r, c = divmod(k, grid_cols)
        canvas[r * (w + 1) : r * (w + 1) + w, c * (w + 1) : c * (w + 1) + w] = tile
    return ImageGray(pixels=np.clip(canvas, 0.0, 1.0))
