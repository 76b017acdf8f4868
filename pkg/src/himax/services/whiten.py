"""Covariance eigendecomposition, rank selection and whitening transforms."""

import logging

import numpy as np
from scipy import linalg

from himax.errors import ConditioningError, DomainError, GeometryError
from himax.models.images import PatchMatrix
from himax.models.whitening import WhiteningMode, WhiteningModel, energy_ratios

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-12


def _matrix(patches: PatchMatrix | np.ndarray) -> np.ndarray:
    return patches.data if isinstance(patches, PatchMatrix) else np.asarray(patches, float)


def select_rank(spectrum: np.ndarray, threshold: float) -> int:
    """Smallest K0 whose cumulative energy ratio reaches the threshold.

    The ratio at K0 is sqrt(sum of the first K0 variances / total variance).

    Raises:
        DomainError: Empty spectrum, non-positive entry or threshold outside (0, 1].
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.size == 0:
        raise DomainError("spectrum is empty")
    if np.any(spectrum <= 0.0):
        raise DomainError("spectrum entries must be positive")
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"threshold {threshold} outside (0, 1]")
    ratios = energy_ratios(spectrum)
    k0 = int(np.searchsorted(ratios, threshold, side="left")) + 1
    return min(k0, spectrum.size)


def fit_whitening(
    patches: PatchMatrix | np.ndarray,
    threshold: float,
    mean: np.ndarray | None = None,
) -> WhiteningModel:
    """Eigendecompose the sample covariance and select the retained rank.

    Args:
        patches: Centered K x M patches
        threshold: Energy threshold epsilon in (0, 1]
        mean: Mean removed by centering; stored so transforms accept raw patches

    Raises:
        DomainError: Fewer than two samples.
        ConditioningError: An eigenvalue at or below 1e-12 of the largest.
    """
    X = _matrix(patches)
    k, m = X.shape
    if m < 2:
        raise DomainError(f"need at least 2 samples to fit whitening, got {m}")

    row_mean = X.mean(axis=1)
    centered = X - row_mean[:, None]
    covariance = centered @ centered.T / (m - 1)
    eigenvalues, eigvecs = linalg.eigh(covariance)
    eigenvalues = eigenvalues[::-1]
    eigvecs = eigvecs[:, ::-1]

    largest = eigenvalues[0]
    if largest <= 0.0:
        raise ConditioningError("covariance is zero", eigenvalue=float(largest))
    weak = np.flatnonzero(eigenvalues <= EIGENVALUE_FLOOR * largest)
    if weak.size:
        bad = float(eigenvalues[weak[0]])
        raise ConditioningError(
            f"covariance is rank deficient: eigenvalue {weak[0] + 1} is {bad:.3e} "
            f"(largest {largest:.3e})",
            eigenvalue=bad,
        )

    # Sign convention: the largest-magnitude entry of every eigenvector is positive
    pivots = np.argmax(np.abs(eigvecs), axis=0)
    eigvecs = eigvecs * np.sign(eigvecs[pivots, np.arange(k)])

    # eigh may return equal eigenvalues in slightly non-monotone float order
    spectrum = np.minimum.accumulate(eigenvalues)
    k0 = select_rank(spectrum, threshold)
    logger.info("Whitening: K=%d, epsilon=%.4g, retained K0=%d", k, threshold, k0)
    return WhiteningModel(
        mean=row_mean if mean is None else mean,
        eigvecs=eigvecs,
        spectrum=spectrum,
        retained_rank=k0,
        threshold=threshold,
    )


def _check_dimension(model: WhiteningModel, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] != model.dimension:
        raise GeometryError(
            f"patch dimension {X.shape[0] if X.ndim else 0} does not match model dimension "
            f"{model.dimension}"
        )


def transform(
    model: WhiteningModel,
    patches: PatchMatrix | np.ndarray,
    mode: WhiteningMode | str = WhiteningMode.WHITEN,
) -> np.ndarray:
    """Whiten (K0 x M) or ZCA-whiten (K x M) patches."""
    X = _matrix(patches)
    _check_dimension(model, X)
    whitened = (model.u0.T @ (X - model.mean[:, None])) / np.sqrt(model.sigma0)[:, None]
    if WhiteningMode(mode) is WhiteningMode.ZCA:
        return model.u0 @ whitened
    return whitened


def reconstruct_lowrank(model: WhiteningModel, patches: PatchMatrix | np.ndarray) -> np.ndarray:
    """Project patches onto the leading K0 eigenvectors, keeping the mean."""
    X = _matrix(patches)
    _check_dimension(model, X)
    u0 = model.u0
    return u0 @ (u0.T @ (X - model.mean[:, None])) + model.mean[:, None]


def whitening_filters(model: WhiteningModel) -> tuple[np.ndarray, np.ndarray]:
    """PCA-whitening (K0 x K) and ZCA (K x K) filter matrices."""
    pca = model.u0.T / np.sqrt(model.sigma0)[:, None]
    return pca, model.u0 @ pca
