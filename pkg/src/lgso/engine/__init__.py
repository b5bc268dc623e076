from .tensor import (
    ShapeError,
    Tensor,
    concat,
    const,
    exp,
    grad,
    l2norm,
    leaky_relu,
    log,
    no_grad,
    sigmoid,
    sqrt,
    square,
    tanh,
)
from .nn import ACTIVATIONS, MLP, Dense
from .optim import AdamState, adam_update, finite_diff_check

__all__ = [
    "ShapeError",
    "Tensor",
    "concat",
    "const",
    "exp",
    "grad",
    "l2norm",
    "leaky_relu",
    "log",
    "no_grad",
    "sigmoid",
    "sqrt",
    "square",
    "tanh",
    "ACTIVATIONS",
    "MLP",
    "Dense",
    "AdamState",
    "adam_update",
    "finite_diff_check",
]
