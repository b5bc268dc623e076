"""Shared fixtures: cheap synthetic problems and small loop configs."""

import numpy as np
import pytest

from lgso.loop import LgsoConfig
from lgso.problems import Problem
from lgso.surrogate import SurrogateConfig


def make_quadratic(minimum=3.0, psi_init=2.0, noise=0.0):
    """1-D deterministic y = (psi - minimum)^2, optional additive noise."""

    def sample_x(rng, n):
        return rng.uniform(0.0, 1.0, size=(n, 1))

    def simulate(psi, xs, rng):
        base = float(np.sum((np.asarray(psi, dtype=float) - minimum) ** 2))
        out = np.full((len(xs), 1), base)
        if noise:
            out = out + noise * rng.standard_normal((len(xs), 1))
        return out

    return Problem(
        name="quadratic", dim=1, x_dim=1, y_dim=1,
        psi_init=np.array([psi_init]), epsilon=0.3,
        sample_x=sample_x, simulate=simulate,
        objective=lambda ys, xs=None: float(np.mean(ys)),
        objective_t=lambda y, xs=None: y.mean(),
    )


def make_constant(value=1.0, dim=1):
    """Simulator that ignores psi entirely."""

    def sample_x(rng, n):
        return rng.uniform(0.0, 1.0, size=(n, 1))

    def simulate(psi, xs, rng):
        return np.full((len(xs), 1), value)

    return Problem(
        name="constant", dim=dim, x_dim=1, y_dim=1,
        psi_init=np.zeros(dim), epsilon=0.3,
        sample_x=sample_x, simulate=simulate,
        objective=lambda ys, xs=None: float(np.mean(ys)),
        objective_t=lambda y, xs=None: y.mean(),
    )


def make_nan_simulator():
    def sample_x(rng, n):
        return rng.uniform(0.0, 1.0, size=(n, 1))

    def simulate(psi, xs, rng):
        return np.full((len(xs), 1), np.nan)

    return Problem(
        name="nan_sim", dim=1, x_dim=1, y_dim=1,
        psi_init=np.zeros(1), epsilon=0.3,
        sample_x=sample_x, simulate=simulate,
        objective=lambda ys, xs=None: float(np.mean(ys)),
        objective_t=lambda y, xs=None: y.mean(),
    )


def fast_lgso_config(**overrides):
    """Small everything: keeps loop tests around a second per run."""
    base = dict(n_psi=2, m_x=16, k_grad=64, epsilon=0.3, max_iterations=5,
                surrogate=SurrogateConfig(epochs=3), history_cap=1024, seed=0)
    base.update(overrides)
    return LgsoConfig(**base)


@pytest.fixture
def quadratic():
    return make_quadratic()
