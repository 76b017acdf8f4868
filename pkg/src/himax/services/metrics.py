"""Entropy-based evaluation metrics and the Amari index."""

import logging
import time

import numpy as np
from scipy.signal import convolve

from himax.config import settings
from himax.errors import DegenerateError, DomainError, ShapeError
from himax.models.analysis import Dictionary, MetricsReport
from himax.models.training import EvaluationOptions, FilterBank
from himax.models.tuning import TuningParams
from himax.services.parallel import map_blocks, ordered_sum
from himax.services.tuning import eval_nonlinearity

logger = logging.getLogger(__name__)

MIN_KDE_SAMPLES = 100
MIN_SPREAD = 1e-12


def silverman_bandwidth(samples: np.ndarray) -> float:
    """1.06 * sigma * n^(-1/5)."""
    return 1.06 * float(np.std(samples, ddof=1)) * samples.size ** (-0.2)


def kde_entropy(
    samples: np.ndarray,
    *,
    bins: int | None = None,
    margin: float | None = None,
    reflect: bool = False,
) -> float:
    """Differential entropy in bits of a Gaussian kernel density estimate.

    Samples are binned on a grid over [min - margin*h, max + margin*h] and the
    counts convolved with the sampled kernel. With ``reflect`` the grid spans
    exactly [min, max] and the counts are mirrored at both ends before the
    convolution, which removes the smoothing bias at hard support edges.

    Raises:
        DomainError: Fewer than 100 samples or non-finite samples.
        DegenerateError: Sample spread below 1e-12.
    """
    samples = np.asarray(samples, dtype=np.float64).ravel()
    bins = bins or settings.kde_grid_bins
    margin = settings.kde_margin if margin is None else margin
    if samples.size < MIN_KDE_SAMPLES:
        raise DomainError(f"need at least {MIN_KDE_SAMPLES} samples, got {samples.size}")
    if not np.all(np.isfinite(samples)):
        raise DomainError("samples contain non-finite values")
    if np.std(samples, ddof=1) < MIN_SPREAD:
        raise DegenerateError("samples have (near) zero spread")

    bandwidth = silverman_bandwidth(samples)
    low, high = samples.min(), samples.max()
    if not reflect:
        low, high = low - margin * bandwidth, high + margin * bandwidth
    counts, edges = np.histogram(samples, bins=bins, range=(low, high))
    width = edges[1] - edges[0]

    offsets = np.arange(-(bins - 1), bins) * width
    kernel = np.exp(-0.5 * (offsets / bandwidth) ** 2)
    counts = counts.astype(np.float64)
    if reflect:
        pad = bins // 5
        padded = np.concatenate([counts[pad - 1 :: -1], counts, counts[: -pad - 1 : -1]])
        density = convolve(padded, kernel, mode="same", method="direct")[pad : pad + bins]
    else:
        density = convolve(counts, kernel, mode="same", method="direct")

    density /= density.sum() * width
    positive = density[density > 0]
    return float(-width * np.sum(positive * np.log2(positive)))


def coefficient_entropy(
    dictionary: Dictionary,
    X_zca: np.ndarray,
    *,
    reflect: bool = False,
) -> float:
    """Mean KDE entropy (bits) of the normalized filter outputs.

    The filters are the display filters Cv; zeta = K1 / sum |cv_k| puts the
    outputs on a common scale.

    Raises:
        ShapeError: Filter and data dimensions differ.
        DegenerateError: A filter has zero norm.
    """
    filters = dictionary.Cv
    if X_zca.shape[0] != filters.shape[0]:
        raise ShapeError(f"filters are {filters.shape[0]}-dimensional, data {X_zca.shape[0]}")
    norms = np.linalg.norm(filters, axis=0)
    if np.any(norms == 0.0):
        raise DegenerateError(f"filter {int(np.flatnonzero(norms == 0.0)[0])} has zero norm")
    zeta = filters.shape[1] / norms.sum()
    outputs = zeta * (filters.T @ X_zca)
    entropies = [kde_entropy(row, reflect=reflect) for row in outputs]
    return float(np.mean(entropies))


def _conditional_log_det_sum(
    C: np.ndarray, Phi: np.ndarray, population_n: float, options: EvaluationOptions,
) -> float:
    k0 = C.shape[0]
    factor = population_n / k0

    def block(columns: slice) -> float:
        squared = Phi[:, columns] ** 2
        fisher = factor * np.einsum("ik,kb,jk->bij", C, squared, C) + np.eye(k0)
        chol = np.linalg.cholesky(fisher)
        return float(2.0 * np.log(np.diagonal(chol, axis1=1, axis2=2)).sum())

    block_size = max(1, min(options.block_size, (1 << 21) // (k0 * k0)))
    return ordered_sum(map_blocks(block, Phi.shape[1], options, block_size=block_size))


def conditional_entropy_from_phi(
    C: FilterBank | np.ndarray,
    Phi: np.ndarray,
    population_n: float,
    options: EvaluationOptions | None = None,
) -> float:
    """h1 in nats from precomputed tuning values Phi (K1 x M)."""
    C = C.C if isinstance(C, FilterBank) else np.asarray(C, dtype=np.float64)
    if population_n <= 0:
        raise DomainError(f"population size must be positive, got {population_n}")
    if Phi.shape[0] != C.shape[1]:
        raise ShapeError(f"Phi has {Phi.shape[0]} rows, C has {C.shape[1]} columns")
    k0, m = C.shape[0], Phi.shape[1]
    log_det_sum = _conditional_log_det_sum(C, Phi, population_n, options or EvaluationOptions())
    return -(log_det_sum - m * k0 * np.log(2 * np.pi * np.e)) / (2 * m)


def conditional_entropy(
    C: FilterBank | np.ndarray,
    X: np.ndarray,
    params: TuningParams,
    population_n: float = 1e6,
    options: EvaluationOptions | None = None,
) -> float:
    """h1 = -(1/2M) sum_m ln det((N/K0 C diag(Phi_m^2) C^T + I) / (2 pi e)), in nats."""
    C = C.C if isinstance(C, FilterBank) else np.asarray(C, dtype=np.float64)
    if X.shape[0] != C.shape[0]:
        raise ShapeError(f"C has {C.shape[0]} rows but the data has shape {X.shape}")
    _, Phi, _ = eval_nonlinearity(params, C.T @ X)
    return conditional_entropy_from_phi(C, Phi, population_n, options)


def measure(
    dictionary: Dictionary,
    C: FilterBank | np.ndarray,
    X_white: np.ndarray,
    X_zca: np.ndarray,
    params: TuningParams,
    *,
    epoch: int = 0,
    population_n: float | None = None,
    reflect: bool = False,
    options: EvaluationOptions | None = None,
) -> MetricsReport:
    """CFE and CDE for one filter bank."""
    population_n = population_n or settings.population_n
    started = time.perf_counter()
    cfe = coefficient_entropy(dictionary, X_zca, reflect=reflect)
    cde = conditional_entropy(C, X_white, params, population_n, options)
    logger.info("Epoch %d: CFE=%.4f bits, CDE=%.4f nats", epoch, cfe, cde)
    return MetricsReport(
        epoch=epoch,
        cfe_bits=cfe,
        cde_nats=cde,
        population_n=population_n,
        samples=X_white.shape[1],
        grid_bins=settings.kde_grid_bins,
        margin=settings.kde_margin,
        reflect=reflect,
        wall_seconds=time.perf_counter() - started,
    )


def amari_index(W: np.ndarray, A: np.ndarray) -> float:
    """Permutation- and scale-invariant distance of W A from a scaled permutation.

    Zero exactly when W A is a scaled permutation; computed on squared entries
    and normalized by 2m.
    """
    P = W @ A
    if P.shape[0] != P.shape[1]:
        raise ShapeError(f"W A must be square, got {P.shape}")
    m = P.shape[0]
    squared = P**2
    columns = np.sum(squared.sum(axis=0) / squared.max(axis=0) - 1)
    rows = np.sum(squared.sum(axis=1) / squared.max(axis=1) - 1)
    return float((columns + rows) / (2 * m))
