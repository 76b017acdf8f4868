"""Training objectives over the filter matrix C and their gradients.

All objectives are averaged per sample. Inputs are whitened K0 x M
matrices; C is K0 x K1 and the projections are Y = C^T X.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from himax.errors import ConditioningError, SaturationError, ShapeError
from himax.models.training import EvaluationOptions, FilterBank
from himax.models.tuning import TuningParams
from himax.services.parallel import map_blocks, ordered_sum
from himax.services.tuning import eval_nonlinearity

logger = logging.getLogger(__name__)

PHI_FLOOR = 1e-300
CONDITION_FLOOR = 1e-12
# Per-block cap on K0 * K1 * samples for the per-sample reference objective
EXACT_BLOCK_ENTRIES = 1 << 21


def _matrix(C: FilterBank | np.ndarray) -> np.ndarray:
    return C.C if isinstance(C, FilterBank) else np.asarray(C, dtype=np.float64)


def _check_shapes(C: np.ndarray, X: np.ndarray, square: bool = False) -> None:
    k0, k1 = C.shape
    if X.ndim != 2 or X.shape[0] != k0:
        raise ShapeError(f"C has {k0} rows but the data has shape {X.shape}")
    if X.shape[1] < 1:
        raise ShapeError("the data has no samples")
    if square and k0 != k1:
        raise ShapeError(f"this objective needs a square C, got {k0}x{k1}")
    if k0 > k1:
        raise ShapeError(f"C must have at least as many columns as rows, got {k0}x{k1}")


def _check_conditioning(matrix: np.ndarray, what: str) -> np.ndarray:
    """Eigenvalues of a symmetric positive definite matrix, or raise."""
    eigenvalues = linalg.eigvalsh(matrix)
    if eigenvalues[-1] <= 0.0 or eigenvalues[0] <= CONDITION_FLOOR * eigenvalues[-1]:
        raise ConditioningError(
            f"{what} is singular (eigenvalues {eigenvalues[0]:.3e} .. {eigenvalues[-1]:.3e})",
            eigenvalue=float(eigenvalues[0]),
        )
    return eigenvalues


# ==================== LOG-DENSITY OBJECTIVE (ALGORITHM 1) ====================


@dataclass
class _LogPart:
    log_sum: float
    grad_sum: np.ndarray | None
    floored: int
    first_floored: tuple[int, int] | None


def _log_density_sums(
    C: np.ndarray, X: np.ndarray, params: TuningParams, options: EvaluationOptions,
    with_grad: bool,
) -> tuple[float, np.ndarray | None]:
    def block(columns: slice) -> _LogPart:
        Xb = X[:, columns]
        _, Phi, Omega = eval_nonlinearity(params, C.T @ Xb)
        small = Phi < PHI_FLOOR
        first = None
        if small.any():
            m, k = np.argwhere(small.T)[0]
            first = (int(k), int(m) + columns.start)
        log_sum = float(np.log(np.maximum(Phi, PHI_FLOOR)).sum())
        grad_sum = Xb @ Omega.T if with_grad else None
        return _LogPart(log_sum, grad_sum, int(small.sum()), first)

    m = X.shape[1]
    parts = map_blocks(block, m, options)
    floored = sum(part.floored for part in parts)
    if floored:
        first = next(part.first_floored for part in parts if part.first_floored is not None)
        total = C.shape[1] * m
        logger.warning("Tuning density floored on %d of %d outputs", floored, total)
        if floored > options.saturation_tolerance * total:
            raise SaturationError(
                f"tuning density underflowed on {floored} of {total} outputs, "
                f"first at output {first[0]}, sample {first[1]}",
                index=first,
            )
    log_sum = ordered_sum([part.log_sum for part in parts])
    grad_sum = ordered_sum([part.grad_sum for part in parts]) if with_grad else None
    return log_sum, grad_sum


def objective_alg1(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> float:
    """Q1 = -(1/M) sum of ln Phi over outputs and samples."""
    C = _matrix(C)
    _check_shapes(C, X, square=True)
    log_sum, _ = _log_density_sums(C, X, params, options or EvaluationOptions(), False)
    return -log_sum / X.shape[1]


def objective_grad_alg1(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> tuple[float, np.ndarray]:
    """Q1 and its gradient -(1/M) X Omega^T.

    Raises:
        ShapeError: C is not square or does not match the data.
        SaturationError: Too many tuning values underflowed.
    """
    C = _matrix(C)
    _check_shapes(C, X, square=True)
    m = X.shape[1]
    log_sum, grad_sum = _log_density_sums(C, X, params, options or EvaluationOptions(), True)
    return -log_sum / m, -grad_sum / m


def _gram_log_det(C: np.ndarray) -> tuple[float, np.ndarray]:
    """ln det(C^T C) and C (C^T C)^-1 for a square nonsingular C."""
    gram = C.T @ C
    eigenvalues = _check_conditioning(gram, "C^T C")
    log_det = float(np.log(eigenvalues).sum())
    return log_det, linalg.solve(gram, C.T, assume_a="pos").T


def objective_q2(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> float:
    """Q2 = Q1 - 1/2 ln det(C^T C), the unconstrained square objective."""
    C = _matrix(C)
    _check_shapes(C, X, square=True)
    log_det, _ = _gram_log_det(C)
    return objective_alg1(C, X, params, options) - 0.5 * log_det


def objective_grad_q2(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> tuple[float, np.ndarray]:
    """Q2 and its gradient grad Q1 - C (C^T C)^-1.

    Raises:
        ConditioningError: C^T C is singular.
    """
    C = _matrix(C)
    _check_shapes(C, X, square=True)
    log_det, inverse_term = _gram_log_det(C)
    q1, grad = objective_grad_alg1(C, X, params, options)
    return q1 - 0.5 * log_det, grad - inverse_term


# ==================== DETERMINANT SURROGATE (ALGORITHM 2) ====================


def _mean_phi(
    C: np.ndarray, X: np.ndarray, params: TuningParams, options: EvaluationOptions,
    with_grad: bool,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Sample means of Phi (K1) and of Phi' x (K0 x K1)."""

    def block(columns: slice):
        Xb = X[:, columns]
        _, Phi, Omega = eval_nonlinearity(params, C.T @ Xb)
        return Phi.sum(axis=1), (Xb @ (Omega * Phi).T if with_grad else None)

    m = X.shape[1]
    parts = map_blocks(block, m, options)
    means = ordered_sum([part[0] for part in parts]) / m
    slopes = ordered_sum([part[1] for part in parts]) / m if with_grad else None
    return means, slopes


def _surrogate_terms(C: np.ndarray, means: np.ndarray) -> tuple[float, np.ndarray]:
    """ln det(C diag(m^2) C^T) and its inverse."""
    dead = np.flatnonzero(means == 0.0)
    if dead.size:
        raise SaturationError(
            f"mean tuning density of output {dead[0]} is zero", index=(int(dead[0]), 0)
        )
    weighted = (C * means**2) @ C.T
    eigenvalues = _check_conditioning(weighted, "C diag(m^2) C^T")
    return float(np.log(eigenvalues).sum()), linalg.inv(weighted, check_finite=False)


def objective_alg2(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> float:
    """Q-hat = -1/2 ln det(C diag(m^2) C^T) with m_k the mean of Phi_k."""
    C = _matrix(C)
    _check_shapes(C, X)
    means, _ = _mean_phi(C, X, params, options or EvaluationOptions(), False)
    log_det, _ = _surrogate_terms(C, means)
    return -0.5 * log_det


def objective_grad_alg2(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> tuple[float, np.ndarray]:
    """Q-hat and its gradient.

    Column k of the gradient is
    -m_k^2 S^-1 c_k - m_k (c_k^T S^-1 c_k) <Phi'(y_k) x>, with S = C diag(m^2) C^T.

    Raises:
        SaturationError: Some m_k is zero.
        ConditioningError: S is singular.
    """
    C = _matrix(C)
    _check_shapes(C, X)
    means, slopes = _mean_phi(C, X, params, options or EvaluationOptions(), True)
    log_det, inverse = _surrogate_terms(C, means)

    inverse_c = inverse @ C
    quadratic = np.einsum("ik,ik->k", C, inverse_c)
    grad = -(means**2) * inverse_c - (means * quadratic) * slopes
    return -0.5 * log_det, grad


# ==================== PER-SAMPLE REFERENCE OBJECTIVE ====================


def _exact_sums(
    C: np.ndarray, X: np.ndarray, params: TuningParams, options: EvaluationOptions,
    with_grad: bool,
) -> tuple[float, np.ndarray | None]:
    k0 = C.shape[0]

    def block(columns: slice):
        Xb = X[:, columns]
        _, Phi, Omega = eval_nonlinearity(params, C.T @ Xb)
        squared = Phi**2
        # C diag(Phi_m^2) C^T = R_m^T R_m with R_m from the QR of (C diag(Phi_m))^T
        factors = np.linalg.qr(np.einsum("ik,kb->bki", C, Phi), mode="r")
        pivots = np.abs(np.diagonal(factors, axis1=1, axis2=2))
        largest = pivots.max(axis=1)
        weak = (largest <= 0.0) | (pivots.min(axis=1) ** 2 <= CONDITION_FLOOR * largest**2)
        if weak.any():
            bad = int(np.flatnonzero(weak)[0])
            raise ConditioningError(
                f"C Phi C^T is singular for sample {columns.start + bad}",
                eigenvalue=float(pivots[bad].min() ** 2),
                sample=columns.start + bad,
            )
        log_sum = float(2.0 * np.log(pivots).sum())
        if not with_grad:
            return log_sum, None

        identity = np.broadcast_to(np.eye(k0), factors.shape)
        roots = np.linalg.solve(factors, identity)
        inverses = roots @ roots.transpose(0, 2, 1)
        direct = np.einsum("bij,jk,kb->ik", inverses, C, squared)
        quadratic = np.einsum("ik,bij,jk->kb", C, inverses, C)
        weights = Phi * (Omega * Phi) * quadratic
        return log_sum, direct + Xb @ weights.T

    block_size = max(1, min(options.block_size, EXACT_BLOCK_ENTRIES // (k0 * C.shape[1])))
    parts = map_blocks(block, X.shape[1], options, block_size=block_size)
    log_sum = ordered_sum([part[0] for part in parts])
    grad_sum = ordered_sum([part[1] for part in parts]) if with_grad else None
    return log_sum, grad_sum


def objective_exact(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> float:
    """Q = -(1/2M) sum_m ln det(C diag(Phi_m^2) C^T)."""
    C = _matrix(C)
    _check_shapes(C, X)
    log_sum, _ = _exact_sums(C, X, params, options or EvaluationOptions(), False)
    return -0.5 * log_sum / X.shape[1]


def objective_grad_exact(
    C: FilterBank | np.ndarray, X: np.ndarray, params: TuningParams,
    options: EvaluationOptions | None = None,
) -> tuple[float, np.ndarray]:
    """Reference objective and its gradient, one K0 x K0 inversion per sample.

    Raises:
        ConditioningError: Some per-sample matrix is singular; names the sample.
    """
    C = _matrix(C)
    _check_shapes(C, X)
    m = X.shape[1]
    log_sum, grad_sum = _exact_sums(C, X, params, options or EvaluationOptions(), True)
    return -0.5 * log_sum / m, -grad_sum / m
