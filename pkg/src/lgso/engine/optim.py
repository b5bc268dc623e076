"""Adam and finite-difference gradient checking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tensor import Tensor, grad, no_grad

__all__ = ["AdamState", "adam_update", "finite_diff_check"]


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_update(params, grads, state):
    """One Adam step over a name -> array dict. Returns (new_params, state).

    `state` is mutated and returned; moment buffers are keyed by parameter
    name and created on first use.
    """
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    out = {}
    for name, p in params.items():
        g = np.asarray(grads[name])
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
        if g.shape != np.shape(p):
            raise ValueError(f"gradient shape {g.shape} != parameter shape {np.shape(p)} for {name!r}")
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p, dtype=np.result_type(p, np.float32))
            v = np.zeros_like(m)
        else:
            v = state.v[name]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        state.m[name] = m
        state.v[name] = v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        out[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out, state


def finite_diff_check(f, point, h=1e-5):
    """Compare reverse-mode gradient of scalar `f` with central differences.

    `f` maps a 1-D tensor to a scalar tensor. Returns the max relative
    error over components, with an absolute floor so exact zero gradients
    compare clean.
    """
    point = np.asarray(point, dtype=np.float64)
    x = Tensor(point.copy(), requires_grad=True)
    y = f(x)
    if not np.all(np.isfinite(y.data)):
        raise FloatingPointError("f returned a non-finite value at the test point")
    g = grad(y, [x])[0].data

    fd = np.empty_like(point)
    with no_grad():
        for i in range(point.size):
            p = point.copy()
            p[i] += h
            hi = f(Tensor(p)).data
            p[i] -= 2.0 * h
            lo = f(Tensor(p)).data
            if not (np.all(np.isfinite(hi)) and np.all(np.isfinite(lo))):
                raise FloatingPointError(f"f returned a non-finite value at probe {i}")
            fd[i] = (float(hi) - float(lo)) / (2.0 * h)

    denom = np.maximum(np.maximum(np.abs(g), np.abs(fd)), 1e-8)
    return float(np.max(np.abs(g - fd) / denom))
