"""The sigmoidal tuning nonlinearity and its slope schedule."""

import numpy as np
from scipy.special import expit

from himax.errors import DomainError
from himax.models.tuning import TuningParams


def init_tuning(k0: int, k1: int, t0: int = 50) -> TuningParams:
    """Initial parameters: zero bias and the reference slope 1.81 * sqrt(K1/K0)."""
    if k0 < 1 or k1 < 1:
        raise DomainError(f"population sizes must be positive, got K0={k0}, K1={k1}")
    if t0 < 0:
        raise DomainError(f"t0 must be non-negative, got {t0}")
    params = TuningParams(beta=1.0, bias=0.0, k0=k0, k1=k1, t0=t0)
    return params.model_copy(update={"beta": params.beta0})


def beta_at_epoch(params: TuningParams, t: int) -> float:
    """Half the reference slope up to epoch t0, the full slope afterwards."""
    if t < 1:
        raise DomainError(f"epochs are numbered from 1, got {t}")
    return 0.5 * params.beta0 if t <= params.t0 else params.beta0


def eval_nonlinearity(
    params: TuningParams, Y: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Elementwise tuning values for projections Y.

    Returns:
        Tuple of (G, Phi, Omega): G = logistic(beta*Y + b),
        Phi = beta * G * (1 - G) / a and Omega = beta * (1 - 2G) = Phi' / Phi.
    """
    z = params.beta * Y + params.bias
    G = expit(z)
    # G * (1 - G) via expit(-z) keeps precision in the upper tail
    Phi = (params.beta / params.scale) * G * expit(-z)
    Omega = params.beta * (1.0 - 2.0 * G)
    return G, Phi, Omega

