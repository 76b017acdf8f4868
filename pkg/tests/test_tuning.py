"""Tests for the tuning nonlinearity and the slope schedule."""

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.special import expit

from himax.errors import DomainError
from himax.models.tuning import TuningParams
from himax.services.tuning import beta_at_epoch, eval_nonlinearity, init_tuning


class TestInitTuning:
    def test_square(self):
        params = init_tuning(16, 16)
        assert params.beta0 == pytest.approx(1.81)
        assert params.scale == pytest.approx(1.0)
        assert params.bias == 0.0
        assert params.beta == params.beta0
        assert params.t0 == 50

    def test_overcomplete(self):
        params = init_tuning(82, 1024)
        assert params.scale == pytest.approx(math.sqrt(1024 / 82))
        assert params.scale == pytest.approx(3.534, abs=1e-3)
        assert params.beta0 == pytest.approx(6.397, abs=1e-3)

    def test_undercomplete_allowed(self):
        assert init_tuning(4, 2).scale == pytest.approx(math.sqrt(0.5))

    @pytest.mark.parametrize("k0,k1", [(0, 3), (3, 0), (-1, 2)])
    def test_non_positive_counts(self, k0, k1):
        with pytest.raises(DomainError):
            init_tuning(k0, k1)


class TestBetaSchedule:
    def test_half_slope_first(self):
        params = init_tuning(5, 5)
        assert beta_at_epoch(params, 1) == pytest.approx(0.905)

    def test_boundary(self):
        params = init_tuning(5, 5, t0=50)
        assert beta_at_epoch(params, 50) == pytest.approx(0.5 * params.beta0)
        assert beta_at_epoch(params, 51) == pytest.approx(params.beta0)

    def test_empty_first_phase(self):
        params = init_tuning(5, 5, t0=0)
        assert beta_at_epoch(params, 1) == params.beta0

    def test_epochs_start_at_one(self):
        with pytest.raises(DomainError):
            beta_at_epoch(init_tuning(2, 2), 0)


class TestEvalNonlinearity:
    def test_center(self):
        params = init_tuning(4, 9)
        G, Phi, Omega = eval_nonlinearity(params, np.zeros((9, 1)))
        np.testing.assert_allclose(G, 0.5)
        np.testing.assert_allclose(Phi, params.beta / params.scale / 4)
        np.testing.assert_allclose(Omega, 0.0)

    def test_saturation(self):
        params = init_tuning(1, 1)
        G, Phi, _ = eval_nonlinearity(params, np.array([[800.0 / params.beta]]))
        assert G[0, 0] == 1.0
        assert Phi[0, 0] == 0.0

    def test_finite_differences(self):
        params = TuningParams(beta=1.81, bias=0.0, k0=2, k1=3)
        y, h = np.array([[0.3]]), 1e-6
        _, Phi, Omega = eval_nonlinearity(params, y)
        g = lambda v: expit(params.beta * v + params.bias) / params.scale  # noqa: E731
        numeric = (g(y + h) - g(y - h)) / (2 * h)
        np.testing.assert_allclose(Phi, numeric, rtol=1e-7)
        log_phi = lambda v: np.log(eval_nonlinearity(params, v)[1])  # noqa: E731
        dlog = (log_phi(y + h) - log_phi(y - h)) / (2 * h)
        np.testing.assert_allclose(Omega, dlog, rtol=1e-6)

    def test_random_slopes_and_biases(self, rng):
        for _ in range(50):
            params = TuningParams(beta=rng.uniform(0.1, 10.0), bias=rng.uniform(-2.0, 2.0),
                                  k0=3, k1=5)
            y, h = rng.uniform(-3.0, 3.0, size=(5, 4)), 1e-6
            G, Phi, Omega = eval_nonlinearity(params, y)
            numeric = (expit(params.beta * (y + h) + params.bias)
                       - expit(params.beta * (y - h) + params.bias)) / (2 * h)
            np.testing.assert_allclose(params.scale * Phi, numeric, rtol=1e-5, atol=1e-9)
            analytic = params.beta**2 * G * (1 - G) * (1 - 2 * G) / params.scale
            np.testing.assert_allclose(Omega * Phi, analytic, atol=1e-10)

    def test_non_negative_and_peaked(self, rng):
        params = TuningParams(beta=2.0, bias=0.6, k0=1, k1=1)
        grid = np.linspace(-5, 5, 10_001)
        _, Phi, _ = eval_nonlinearity(params, grid)
        assert np.all(Phi >= 0)
        assert grid[np.argmax(Phi)] == pytest.approx(-params.bias / params.beta, abs=1e-3)

    def test_reference_density_unimodal_symmetric(self):
        params = init_tuning(10, 10)
        grid = np.linspace(-20, 20, 4001)
        _, Phi, _ = eval_nonlinearity(params, grid)
        density = Phi / trapezoid(Phi, grid)
        assert trapezoid(density, grid) == pytest.approx(1.0)
        peak = np.argmax(density)
        assert grid[peak] == pytest.approx(0.0)
        np.testing.assert_allclose(density, density[::-1], rtol=1e-10)
        assert np.all(np.diff(density[: peak + 1]) >= 0)
        assert np.all(np.diff(density[peak:]) <= 0)
