"""Dense layers and MLPs on top of the tensor engine."""

from __future__ import annotations

import numpy as np

from .tensor import ShapeError, Tensor, identity, leaky_relu, matmul, sigmoid, tanh

__all__ = ["ACTIVATIONS", "Dense", "MLP"]

ACTIVATIONS = {
    "tanh": tanh,
    "leaky_relu": leaky_relu,
    "sigmoid": sigmoid,
    "identity": identity,
}


class Dense:
    """Affine layer y = x W + b with a named activation."""

    def __init__(self, in_dim, out_dim, activation="identity", rng=None, dtype=np.float64):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}, expected one of {sorted(ACTIVATIONS)}")
        if rng is None:
            rng = np.random.default_rng()
        bound = 1.0 / np.sqrt(in_dim)
        self.w = Tensor(rng.uniform(-bound, bound, size=(in_dim, out_dim)).astype(dtype), requires_grad=True)
        self.b = Tensor(rng.uniform(-bound, bound, size=(out_dim,)).astype(dtype), requires_grad=True)
        self.activation = activation

    def __call__(self, x):
        if x.data.ndim != 2 or x.data.shape[1] != self.w.data.shape[0]:
            raise ShapeError(f"dense layer expects (batch, {self.w.data.shape[0]}) input, got {x.data.shape}")
        return ACTIVATIONS[self.activation](matmul(x, self.w) + self.b)


class MLP:
    """Stack of Dense layers; one activation name per layer."""

    def __init__(self, dims, activations, rng=None, dtype=np.float64):
        if len(activations) != len(dims) - 1:
            raise ValueError(f"{len(dims) - 1} layers but {len(activations)} activations")
        self.layers = [
            Dense(dims[i], dims[i + 1], activations[i], rng=rng, dtype=dtype) for i in range(len(dims) - 1)
        ]

    def __call__(self, x):
        for layer in self.layers:
            x = layer(x)
        return x

    def parameters(self):
        """Named parameter tensors, stable order."""
        out = {}
        for i, layer in enumerate(self.layers):
            out[f"layer{i}.w"] = layer.w
            out[f"layer{i}.b"] = layer.b
        return out

    def state_dict(self):
        return {k: v.data.copy() for k, v in self.parameters().items()}

    def load_state_dict(self, state):
        params = self.parameters()
        if set(state) != set(params):
            raise ValueError("parameter names do not match this architecture")
        for k, v in params.items():
            arr = np.asarray(state[k], dtype=v.data.dtype)
            if arr.shape != v.data.shape:
                raise ShapeError(f"{k}: stored shape {arr.shape} != model shape {v.data.shape}")
            v.data = arr
