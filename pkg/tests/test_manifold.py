"""Tests for constrained updates, orthonormalization and step adaptation."""

import numpy as np
import pytest
from conftest import orthonormal_rows

from himax.errors import ConditioningError, RankError, StallError
from himax.models.training import TrainState
from himax.services.manifold import (
    adapt_step,
    gram_schmidt_rows,
    relative_step,
    step_scale,
    stiefel_step,
)


def gradient_step(C, grad, mu):
    return C - mu * grad


class TestStiefelStep:
    def test_zero_gradient(self, rng):
        C = rng.standard_normal((3, 5))
        np.testing.assert_array_equal(stiefel_step(C, np.zeros_like(C), 0.3), C)

    def test_second_order_tangency(self, rng):
        for _ in range(100):
            k0 = int(rng.integers(1, 5))
            k1 = int(rng.integers(k0, 8))
            C = orthonormal_rows(rng, k0, k1)
            grad = rng.standard_normal((k0, k1))
            mu = 10 ** rng.uniform(-4, -1)
            moved = stiefel_step(C, grad, mu)
            drift = np.linalg.norm(moved @ moved.T - np.eye(k0))
            assert drift <= 10 * mu**2 * np.linalg.norm(grad) ** 2 + 1e-14

    def test_aligned_gradient_is_fixed_point(self, rng):
        C = orthonormal_rows(rng, 4, 4)
        np.testing.assert_allclose(stiefel_step(C, C, 0.5), C, atol=1e-12)

    def test_relative_step(self, rng):
        C, grad = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
        np.testing.assert_allclose(relative_step(C, grad, 0.1), C - 0.1 * C @ C.T @ grad)


class TestGramSchmidt:
    def test_orthonormal_unchanged(self, rng):
        C = orthonormal_rows(rng, 3, 5)
        np.testing.assert_allclose(gram_schmidt_rows(C), C, atol=1e-14)

    def test_hand_example(self):
        np.testing.assert_allclose(gram_schmidt_rows(np.array([[2.0, 0.0], [1.0, 1.0]])),
                                   np.eye(2), atol=1e-15)

    def test_random_full_rank(self, rng):
        C = rng.standard_normal((4, 7))
        result = gram_schmidt_rows(C)
        assert np.linalg.norm(result @ result.T - np.eye(4)) < 1e-12
        # same row space
        projector = result.T @ result
        np.testing.assert_allclose(C @ projector, C, atol=1e-10)
        # first row keeps its direction
        np.testing.assert_allclose(result[0], C[0] / np.linalg.norm(C[0]), atol=1e-12)

    def test_dependent_rows(self):
        with pytest.raises(RankError):
            gram_schmidt_rows(np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]]))

    def test_too_many_rows(self, rng):
        with pytest.raises(RankError):
            gram_schmidt_rows(rng.standard_normal((3, 2)))


class TestAdaptStep:
    def test_unit_scale(self):
        C = np.array([[1.0, 0.0], [0.0, 2.0]])
        grad = np.array([[0.0, 2.0], [1.0, 0.0]])
        assert step_scale(C, grad) == pytest.approx(1.0)
        _, state = adapt_step(TrainState(rate_factor=0.4), C, grad, lambda c: -1.0,
                              current=0.0, update=gradient_step)
        assert state.step == pytest.approx(0.4)
        assert state.backtracks == 0
        assert state.rate_factor == 0.4

    def test_quadratic_descent(self, rng):
        target = rng.standard_normal((3, 4))
        C = rng.standard_normal((3, 4))
        state = TrainState(rate_factor=0.4)

        def objective(c):
            return float(np.sum((c - target) ** 2))

        accepted = [objective(C)]
        for _ in range(30):
            C, state = adapt_step(state, C, 2 * (C - target), objective, tau=0.8,
                                  update=gradient_step)
            accepted.append(state.objective)
        assert all(b < a for a, b in zip(accepted, accepted[1:]))

    def test_backtracks_until_decrease(self):
        C = np.ones((1, 2))
        grad = np.ones((1, 2))
        # Only steps with mu < 0.1 decrease the objective
        state = TrainState(rate_factor=0.4)
        _, state = adapt_step(state, C, grad, lambda c: -1.0 if c[0, 0] > 0.9 else 1.0,
                              current=0.0, tau=0.5, update=gradient_step)
        assert state.backtracks == 3
        assert state.rate_factor == pytest.approx(0.05)
        assert state.step == pytest.approx(0.05)

    def test_numerical_failure_counts_as_rejection(self):
        C, grad = np.ones((1, 2)), np.ones((1, 2))

        def objective(c):
            if c[0, 0] < 0.8:
                raise ConditioningError("singular candidate")
            return -1.0

        _, state = adapt_step(TrainState(rate_factor=0.4), C, grad, objective,
                              current=0.0, tau=0.5, update=gradient_step)
        assert state.backtracks == 1

    def test_stall(self):
        C, grad = np.ones((1, 2)), np.ones((1, 2))
        with pytest.raises(StallError) as info:
            adapt_step(TrainState(rate_factor=0.4), C, grad, lambda c: 5.0, current=2.0,
                       update=gradient_step, max_backtracks=5)
        assert info.value.objective == 2.0

    def test_zero_gradient(self, rng):
        C = rng.standard_normal((2, 3))
        moved, state = adapt_step(TrainState(rate_factor=0.4), C, np.zeros((2, 3)),
                                  lambda c: 1.0)
        np.testing.assert_array_equal(moved, C)
        assert state.step == 0.0
        assert state.objective == 1.0

    def test_gradient_normal_to_constraint(self):
        calls = []

        def objective(c):
            calls.append(c.copy())
            return 0.0

        # For a single unit-norm filter the constrained direction -g + C g^T C vanishes
        C = np.array([[1.0]])
        moved, state = adapt_step(TrainState(rate_factor=0.4), C, np.array([[-3.0]]),
                                  objective, current=-1.5, max_backtracks=5)
        np.testing.assert_array_equal(moved, C)
        assert (state.step, state.backtracks, state.objective) == (0.0, 0, -1.5)
        assert calls == []

    def test_candidates_are_retracted(self, rng):
        C = orthonormal_rows(rng, 2, 4)
        grad = rng.standard_normal((2, 4))
        seen = []

        def objective(c):
            seen.append(np.linalg.norm(c @ c.T - np.eye(2)))
            return -float(len(seen))

        moved, _ = adapt_step(TrainState(rate_factor=0.4), C, grad, objective, current=0.0,
                              retract=gram_schmidt_rows)
        assert max(seen) < 1e-12
        assert np.linalg.norm(moved @ moved.T - np.eye(2)) < 1e-12
