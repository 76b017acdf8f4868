"""Updates on the row-orthonormality constraint and the adaptive step size."""

import logging
from collections.abc import Callable

import numpy as np
from scipy import linalg

from himax.errors import NumericalError, RankError, StallError
from himax.models.training import TrainState

logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12
# Relative size of the update direction below which C is stationary
STATIONARY_TOLERANCE = 1e-12

Update = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


def stiefel_step(C: np.ndarray, grad: np.ndarray, mu: float) -> np.ndarray:
    """C + mu * (-grad + C grad^T C), tangent to C C^T = I to first order."""
    return C + mu * (-grad + C @ grad.T @ C)


def relative_step(C: np.ndarray, grad: np.ndarray, mu: float) -> np.ndarray:
    """Unconstrained relative-gradient step C - mu * C C^T grad."""
    return C - mu * (C @ (C.T @ grad))


def gram_schmidt_rows(C: np.ndarray) -> np.ndarray:
    """Orthonormalize the rows of C in order.

    Computed as a QR factorization of C^T with the signs fixed so that every
    row keeps a positive component along its original direction.

    Raises:
        RankError: If the rows are linearly dependent.
    """
    C = np.asarray(C, dtype=np.float64)
    k0, k1 = C.shape
    if k0 > k1:
        raise RankError(f"{k0} rows in {k1} dimensions cannot be independent")
    Q, R = linalg.qr(C.T, mode="economic")
    diagonal = np.diag(R)
    scale = np.abs(diagonal).max(initial=0.0)
    weak = np.flatnonzero(np.abs(diagonal) <= RANK_TOLERANCE * scale) if scale else [0]
    if len(weak):
        raise RankError(f"row {weak[0]} is linearly dependent on the rows before it")
    return (Q * np.sign(diagonal)).T


def step_scale(C: np.ndarray, grad: np.ndarray) -> float:
    """kappa: mean over columns of |grad_k| / |c_k| (zero columns are skipped)."""
    grad_norms = np.linalg.norm(grad, axis=0)
    filter_norms = np.linalg.norm(C, axis=0)
    ratios = np.divide(
        grad_norms, filter_norms, out=np.zeros_like(grad_norms), where=filter_norms > 0
    )
    return float(ratios.mean())


def adapt_step(
    state: TrainState,
    C: np.ndarray,
    grad: np.ndarray,
    objective_fn: Callable[[np.ndarray], float],
    *,
    tau: float = 0.8,
    current: float | None = None,
    update: Update = stiefel_step,
    retract: Callable[[np.ndarray], np.ndarray] | None = None,
    max_backtracks: int = 60,
) -> tuple[np.ndarray, TrainState]:
    """Take one backtracked step with mu = v / kappa.

    A candidate is accepted only if it strictly decreases the objective;
    otherwise v shrinks by tau and the step is retried. Candidates are
    retracted (when ``retract`` is given) before they are evaluated, and a
    candidate whose evaluation fails numerically counts as a rejection. When
    the update direction vanishes (a zero gradient, or one normal to the
    constraint) no step is taken and the state reports mu = 0.

    Returns:
        Tuple of (new C, new state). The state records the accepted objective,
        mu and the number of shrinkages; v carries over unchanged on success.

    Raises:
        StallError: After max_backtracks shrinkages without a decrease.
    """
    if current is None:
        current = objective_fn(C)
    kappa = step_scale(C, grad)
    direction = np.linalg.norm(update(C, grad, 1.0) - C)
    if kappa == 0.0 or direction <= STATIONARY_TOLERANCE * np.linalg.norm(grad):
        logger.debug("No descent direction (|direction| = %.3e); no step taken", direction)
        return C, state.model_copy(update={"step": 0.0, "objective": current, "backtracks": 0})

    v = state.rate_factor
    for shrinks in range(max_backtracks + 1):
        mu = v / kappa
        try:
            candidate = update(C, grad, mu)
            if retract is not None:
                candidate = retract(candidate)
            value = objective_fn(candidate)
        except NumericalError as exc:
            logger.debug("Candidate at mu=%.3e rejected: %s", mu, exc)
            value = np.inf
        if value < current:
            new_state = state.model_copy(
                update={"rate_factor": v, "step": mu, "objective": float(value),
                        "backtracks": shrinks}
            )
            return candidate, new_state
        v *= tau

    raise StallError(
        f"no decrease after {max_backtracks} step reductions (objective {current:.6g})",
        objective=current,
    )
