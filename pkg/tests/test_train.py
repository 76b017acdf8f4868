"""Tests for the training loop."""

import numpy as np
import pytest
from scipy.stats import ortho_group

from himax.errors import ShapeError, StallError
from himax.models.training import Algorithm, StepStatus, TrainConfig
from himax.services.manifold import adapt_step
from himax.services.metrics import amari_index
from himax.services.train import initial_filters, phase_plan, run_training
from himax.services.tuning import init_tuning
from himax.services.whiten import fit_whitening, transform, whitening_filters


def laplacian_mixture(seed: int, k: int = 4, m: int = 20_000):
    """Unit-variance Laplacian sources under a well-conditioned square mixing."""
    rng = np.random.default_rng(seed)
    sources = rng.laplace(scale=1 / np.sqrt(2), size=(k, m))
    rotations = ortho_group.rvs(k, size=2, random_state=seed)
    A = rotations[0] @ np.diag(rng.uniform(1.0, 3.0, size=k)) @ rotations[1]
    return A, A @ sources


def whitened(X: np.ndarray, threshold: float = 1.0):
    mean = X.mean(axis=1)
    model = fit_whitening(X - mean[:, None], threshold, mean=mean)
    return model, transform(model, X)


def non_increasing(values) -> bool:
    return all(b <= a for a, b in zip(values, values[1:]))


class TestInitialFilters:
    def test_orthonormal_and_seeded(self):
        C = initial_filters(3, 5, seed=11)
        np.testing.assert_allclose(C @ C.T, np.eye(3), atol=1e-12)
        np.testing.assert_array_equal(C, initial_filters(3, 5, seed=11))
        assert not np.array_equal(C, initial_filters(3, 5, seed=12))


class TestPhasePlan:
    def test_alg1_switches_objective(self):
        first, second = phase_plan(Algorithm.ALG1, 1), phase_plan(Algorithm.ALG1, 2)
        assert first.retract is not None
        assert second.retract is None
        assert first.value is not second.value

    def test_alg2_keeps_objective(self):
        first, second = phase_plan(Algorithm.ALG2, 1), phase_plan(Algorithm.ALG2, 2)
        assert first.value is second.value
        assert first.update is second.update
        assert second.retract is None


class TestRunTraining:
    def test_single_unit(self, rng):
        X = rng.standard_normal((1, 200))
        cfg = TrainConfig(t_max=5, t0=5)
        bank, state = run_training(X, cfg, init_tuning(1, 1))
        assert abs(bank.C[0, 0]) == pytest.approx(1.0, abs=1e-12)
        assert len(state.history) == 5
        assert {entry.status for entry in state.history} == {StepStatus.CONVERGED}
        assert state.stalled_phases == []

    def test_orthonormal_phase_and_monotone_history(self):
        A, X = laplacian_mixture(seed=3, k=3, m=3000)
        _, X_white = whitened(X)
        drift = {}

        def record(epoch, C, params, state):
            drift[epoch] = np.linalg.norm(C @ C.T - np.eye(3))

        cfg = TrainConfig(t_max=30, t0=12)
        _, state = run_training(X_white, cfg, init_tuning(3, 3), on_epoch=record)
        assert sorted(drift) == list(range(1, 31))
        assert max(drift[t] for t in range(1, 13)) < 1e-8
        assert non_increasing(state.phase_objectives(1))
        assert non_increasing(state.phase_objectives(2))
        assert [entry.phase for entry in state.history] == [1] * 12 + [2] * 18

    def test_beta_schedule_in_history(self, rng):
        X = rng.standard_normal((2, 500))
        params = init_tuning(2, 2)
        _, state = run_training(X, TrainConfig(t_max=4, t0=2), params)
        betas = [entry.beta for entry in state.history]
        assert betas == pytest.approx([0.5 * params.beta0] * 2 + [params.beta0] * 2)

    def test_deterministic(self):
        _, X = laplacian_mixture(seed=5, k=2, m=2000)
        _, X_white = whitened(X)
        cfg = TrainConfig(t_max=15, t0=5, seed=9)
        first_bank, first = run_training(X_white, cfg, init_tuning(2, 2))
        second_bank, second = run_training(X_white, cfg, init_tuning(2, 2))
        np.testing.assert_array_equal(first_bank.C, second_bank.C)
        assert [e.objective for e in first.history] == [e.objective for e in second.history]
        assert [e.step for e in first.history] == [e.step for e in second.history]

    def test_overcomplete_surrogate(self):
        _, X = laplacian_mixture(seed=1, k=2, m=1500)
        _, X_white = whitened(X)
        cfg = TrainConfig(t_max=20, t0=8)
        bank, state = run_training(X_white, cfg, init_tuning(2, 5))
        assert state.algorithm is Algorithm.ALG2
        assert bank.smallest_singular_value() > 1e-10
        assert non_increasing(state.phase_objectives(1))
        assert non_increasing(state.phase_objectives(2))

    def test_exact_reference(self):
        _, X = laplacian_mixture(seed=2, k=2, m=200)
        _, X_white = whitened(X)
        cfg = TrainConfig(algorithm=Algorithm.EXACT, t_max=6, t0=3)
        bank, state = run_training(X_white, cfg, init_tuning(2, 3))
        assert bank.k1 == 3
        assert non_increasing(state.phase_objectives(1))
        assert non_increasing(state.phase_objectives(2))

    def test_bias_training(self, rng):
        X = rng.laplace(size=(2, 1000)) + 0.3
        cfg = TrainConfig(t_max=10, t0=4, train_bias=True)
        _, state = run_training(X, cfg, init_tuning(2, 2))
        assert any(entry.bias != 0.0 for entry in state.history)
        assert state.params.bias == state.history[-1].bias
        assert non_increasing(state.phase_objectives(1))
        assert non_increasing(state.phase_objectives(2))

    def test_mini_batches(self, rng):
        X = rng.laplace(size=(2, 1000))
        cfg = TrainConfig(t_max=6, t0=3, batch_size=250, seed=4)
        bank, state = run_training(X, cfg, init_tuning(2, 2))
        again, _ = run_training(X, cfg, init_tuning(2, 2))
        np.testing.assert_array_equal(bank.C, again.C)
        assert len(state.history) == 6
        assert state.history[0].status is not StepStatus.HELD

    def test_stall_holds_rest_of_phase(self, monkeypatch):
        _, X = laplacian_mixture(seed=6, k=2, m=1000)
        _, X_white = whitened(X)
        calls = []

        def stall_on_third_call(*args, **kwargs):
            calls.append(len(calls) + 1)
            if len(calls) == 3:
                raise StallError("no decrease", objective=0.0)
            return adapt_step(*args, **kwargs)

        monkeypatch.setattr("himax.services.train.adapt_step", stall_on_third_call)
        filters = {}

        def record(epoch, C, params, state):
            filters[epoch] = C.copy()

        cfg = TrainConfig(t_max=7, t0=5)
        _, state = run_training(X_white, cfg, init_tuning(2, 2), on_epoch=record)
        assert state.stalled_phases == [1]
        assert [entry.status for entry in state.history[:5]] == [
            StepStatus.ACCEPTED, StepStatus.ACCEPTED, StepStatus.STALLED,
            StepStatus.HELD, StepStatus.HELD,
        ]
        assert StepStatus.HELD not in {entry.status for entry in state.history[5:]}
        # Epoch 3 stalled before any step: C stays at its epoch-2 value through the phase
        for epoch in (3, 4, 5):
            np.testing.assert_array_equal(filters[epoch], filters[2])
        assert all(entry.step == 0.0 for entry in state.history[2:5])
        assert non_increasing(state.phase_objectives(1))
        assert non_increasing(state.phase_objectives(2))
        assert len(calls) == 5

    def test_shape_errors(self, rng):
        with pytest.raises(ShapeError):
            run_training(rng.standard_normal((3, 10)), TrainConfig(t_max=2, t0=1),
                         init_tuning(2, 2))
        with pytest.raises(ShapeError):
            run_training(rng.standard_normal((3, 10)), TrainConfig(t_max=2, t0=1),
                         init_tuning(3, 2))
        with pytest.raises(ShapeError):
            run_training(rng.standard_normal((2, 10)),
                         TrainConfig(algorithm=Algorithm.ALG1, t_max=2, t0=1),
                         init_tuning(2, 3))

    def test_t0_cannot_exceed_t_max(self):
        with pytest.raises(ValueError):
            TrainConfig(t_max=10, t0=11)


class TestSourceRecovery:
    def test_laplacian_sources(self):
        recovered = 0
        for seed in range(10):
            A, X = laplacian_mixture(seed)
            model, X_white = whitened(X)
            bank, state = run_training(X_white, TrainConfig(seed=seed), init_tuning(4, 4))
            assert non_increasing(state.phase_objectives(1))
            assert non_increasing(state.phase_objectives(2))
            pca, _ = whitening_filters(model)
            recovered += amari_index(bank.C.T @ pca, A) < 0.05
        assert recovered >= 9
