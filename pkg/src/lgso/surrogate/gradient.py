"""Objective gradient w.r.t. psi through a frozen surrogate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..engine import Tensor, grad


@dataclass
class GradEstimate:
    gradient: np.ndarray
    k: int
    objective: float


def surrogate_sample(model, z, x, psi):
    """Differentiable surrogate draw; thin alias for model.sample_t."""
    return model.sample_t(z, x, psi)


def surrogate_grad(model, psi, k, x_sampler, objective_t, rng):
    """Monte Carlo estimate of d E[R] / d psi with k surrogate draws.

    Draws z ~ N(0,1) and x ~ q(x), pushes them through the frozen
    surrogate at a graph-leaf psi, and differentiates the batch objective.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    psi_t = Tensor(np.asarray(psi, dtype=float).copy(), requires_grad=True)
    z = rng.standard_normal((k, model.noise_dim))
    xs = x_sampler(rng, k)
    y = model.sample_t(z, xs, psi_t)
    r = objective_t(y, xs)
    g = grad(r, [psi_t])[0].data
    bad = np.flatnonzero(~np.isfinite(g))
    if bad.size:
        raise FloatingPointError(f"non-finite surrogate gradient at component {bad[0]}")
    return GradEstimate(gradient=g, k=k, objective=float(r.data))
