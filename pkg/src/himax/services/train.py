"""The training loop over the filter matrix C."""

import logging
import time
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from himax.errors import NumericalError, ShapeError, StallError
from himax.models.training import (
    Algorithm,
    FilterBank,
    HistoryEntry,
    StepStatus,
    TrainConfig,
    TrainState,
)
from himax.models.tuning import TuningParams
from himax.services import objectives
from himax.services.manifold import adapt_step, gram_schmidt_rows, relative_step, stiefel_step
from himax.services.tuning import beta_at_epoch

logger = logging.getLogger(__name__)

BIAS_STEP = 1e-6

EpochCallback = Callable[[int, np.ndarray, TuningParams, TrainState], None]


@dataclass(frozen=True)
class PhasePlan:
    """Objective and update rule used during one phase."""

    value: Callable
    value_grad: Callable
    update: Callable
    retract: Callable | None


def phase_plan(algorithm: Algorithm, phase: int) -> PhasePlan:
    """Objective and update rule for an algorithm in phase 1 (orthonormal) or 2."""
    if algorithm is Algorithm.ALG1:
        if phase == 1:
            return PhasePlan(objectives.objective_alg1, objectives.objective_grad_alg1,
                             stiefel_step, gram_schmidt_rows)
        return PhasePlan(objectives.objective_q2, objectives.objective_grad_q2,
                         relative_step, None)
    if algorithm is Algorithm.ALG2:
        pair = (objectives.objective_alg2, objectives.objective_grad_alg2)
    elif algorithm is Algorithm.EXACT:
        pair = (objectives.objective_exact, objectives.objective_grad_exact)
    else:
        raise ValueError(f"unresolved algorithm {algorithm}")
    return PhasePlan(*pair, stiefel_step, gram_schmidt_rows if phase == 1 else None)


def initial_filters(k0: int, k1: int, seed: int) -> np.ndarray:
    """Uniform [-1, 1] entries from the seeded generator, rows orthonormalized."""
    rng = np.random.default_rng(seed)
    return gram_schmidt_rows(rng.uniform(-1.0, 1.0, size=(k0, k1)))


def _bias_step(
    objective: Callable[[TuningParams], float],
    params: TuningParams,
    current: float,
    rate: float,
    tau: float,
    max_backtracks: int,
) -> tuple[TuningParams, float]:
    """One backtracked scalar step on b along a central-difference derivative."""
    shifted = [params.model_copy(update={"bias": params.bias + s * BIAS_STEP}) for s in (1, -1)]
    derivative = (objective(shifted[0]) - objective(shifted[1])) / (2 * BIAS_STEP)
    if derivative == 0.0:
        return params, current
    for _ in range(max_backtracks + 1):
        candidate = params.model_copy(update={"bias": params.bias - rate * derivative})
        try:
            value = objective(candidate)
        except NumericalError:
            value = np.inf
        if value < current:
            return candidate, value
        rate *= tau
    logger.debug("Bias step found no decrease; b stays at %.6g", params.bias)
    return params, current


def run_training(
    X: np.ndarray,
    cfg: TrainConfig,
    params: TuningParams,
    *,
    on_epoch: EpochCallback | None = None,
) -> tuple[FilterBank, TrainState]:
    """Learn C from whitened data.

    Epochs 1..t0 take row-orthonormalized steps on the phase-1 objective
    with half slope; later epochs drop the orthonormalization (alg1 moves to
    Q2 with relative-gradient steps). The rate factor is reset to v1 at the
    phase switch. A stalled line search ends its phase; the remaining epochs
    of that phase are recorded as held.

    Args:
        X: Whitened K0 x M data
        cfg: Training settings
        params: Tuning parameters (t0 is taken from cfg)
        on_epoch: Called after every epoch with (epoch, C, params, state)

    Returns:
        Tuple of (final filter bank, final state with full history).

    Raises:
        ShapeError: Data, sizes and algorithm disagree.
    """
    X = np.asarray(X, dtype=np.float64)
    k0, k1 = params.k0, params.k1
    if X.ndim != 2 or X.shape[0] != k0:
        raise ShapeError(f"data has shape {X.shape}, expected {k0} rows")
    if k1 < k0:
        raise ShapeError(f"K1={k1} outputs cannot span K0={k0} inputs")
    algorithm = cfg.algorithm.resolve(k0, k1)
    if algorithm is Algorithm.ALG1 and k0 != k1:
        raise ShapeError(f"alg1 needs K0 = K1, got {k0} and {k1}")

    params = params.model_copy(update={"t0": cfg.t0})
    options = cfg.evaluation
    batch_rng = np.random.default_rng([cfg.seed, 1])
    C = initial_filters(k0, k1, cfg.seed)
    state = TrainState(rate_factor=cfg.v1, algorithm=algorithm, params=params)
    logger.info(
        "Training %s: K0=%d K1=%d M=%d t_max=%d t0=%d",
        algorithm.value, k0, k1, X.shape[1], cfg.t_max, cfg.t0,
    )

    started = time.perf_counter()
    for t in range(1, cfg.t_max + 1):
        phase = 1 if t <= cfg.t0 else 2
        if t == cfg.t0 + 1:
            state = state.model_copy(update={"rate_factor": cfg.v1})
        params = params.model_copy(update={"beta": beta_at_epoch(params, t)})
        plan = phase_plan(algorithm, phase)

        def value_at(candidate: np.ndarray, data: np.ndarray = X,
                     p: TuningParams = params) -> float:
            return plan.value(candidate, data, p, options)

        status = StepStatus.HELD if phase in state.stalled_phases else StepStatus.ACCEPTED
        backtracks = 0
        if status is StepStatus.ACCEPTED:
            batches = [X]
            if cfg.batch_size is not None and cfg.batch_size < X.shape[1]:
                order = batch_rng.permutation(X.shape[1])
                batches = [X[:, order[i : i + cfg.batch_size]]
                           for i in range(0, X.shape[1], cfg.batch_size)]
            for batch in batches:
                value, grad = plan.value_grad(C, batch, params, options)
                try:
                    C, state = adapt_step(
                        state, C, grad,
                        lambda candidate, data=batch: value_at(candidate, data),
                        tau=cfg.tau, current=value, update=plan.update,
                        retract=plan.retract, max_backtracks=cfg.max_backtracks,
                    )
                except StallError as exc:
                    logger.warning("Epoch %d: phase %d stalled: %s", t, phase, exc)
                    state.stalled_phases.append(phase)
                    status = StepStatus.STALLED
                    break
                backtracks += state.backtracks
                if state.step == 0.0:
                    status = StepStatus.CONVERGED

        full_batch = cfg.batch_size is None or cfg.batch_size >= X.shape[1]
        if full_batch and status in (StepStatus.ACCEPTED, StepStatus.CONVERGED):
            objective = state.objective
        else:
            objective = value_at(C)
        if cfg.train_bias and status is not StepStatus.HELD:
            params, objective = _bias_step(
                lambda p: plan.value(C, X, p, options), params, objective,
                cfg.v1, cfg.tau, cfg.max_backtracks,
            )

        state = state.model_copy(update={"epoch": t, "objective": objective, "params": params})
        state.history.append(
            HistoryEntry(
                epoch=t,
                phase=phase,
                objective=objective,
                step=state.step if status in (StepStatus.ACCEPTED, StepStatus.CONVERGED) else 0.0,
                backtracks=backtracks,
                status=status,
                beta=params.beta,
                bias=params.bias,
                wall_seconds=time.perf_counter() - started,
            )
        )
        logger.info(
            "Epoch %d/%d phase %d: objective=%.6f step=%.3e backtracks=%d %s",
            t, cfg.t_max, phase, objective, state.history[-1].step, backtracks, status.value,
        )
        if on_epoch is not None:
            on_epoch(t, C, params, state)

    return FilterBank(C=C), state
