"""Minimal reverse-mode autodiff on dense numpy arrays.

Every op's vector-Jacobian product is itself expressed with tensor ops, so
gradients can be taken through gradients (needed for critic gradient
penalties). Plain first-order backward runs the same VJP code with graph
recording switched off.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Tensor",
    "ShapeError",
    "no_grad",
    "const",
    "concat",
    "grad",
    "leaky_relu",
    "sigmoid",
    "tanh",
    "exp",
    "log",
    "sqrt",
    "square",
    "l2norm",
]


class ShapeError(ValueError):
    """Raised when an op receives inputs of incompatible shape."""


_GRAD_ENABLED = True


class no_grad:
    """Context manager that disables graph recording."""

    def __enter__(self):
        global _GRAD_ENABLED
        self._prev = _GRAD_ENABLED
        _GRAD_ENABLED = False
        return self

    def __exit__(self, *exc):
        global _GRAD_ENABLED
        _GRAD_ENABLED = self._prev
        return False


class Tensor:
    __slots__ = ("data", "requires_grad", "_edges", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data)
        self.requires_grad = bool(requires_grad)
        self._edges = ()  # ((parent, vjp_fn), ...)
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self):
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"

    # -- operator sugar -----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_lift(other, self), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(_lift(other, self), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return power(self, p)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    @property
    def T(self):
        return transpose(self)

    def reshape(self, shape):
        return reshape(self, shape)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)


def const(data, dtype=None):
    """Non-trainable tensor wrapping `data`."""
    arr = np.asarray(data)
    if dtype is not None and arr.dtype != dtype:
        arr = arr.astype(dtype)
    return Tensor(arr)


def _lift(x, like):
    if isinstance(x, Tensor):
        return x
    return const(x, dtype=like.data.dtype)


def _node(data, edges):
    """Build the result tensor, keeping edges only when recording."""
    out = Tensor(data)
    if _GRAD_ENABLED:
        kept = tuple(e for e in edges if e[0].requires_grad)
        if kept:
            out._edges = kept
            out.requires_grad = True
    return out


def _unbroadcast(g, shape):
    """Reduce gradient `g` back to `shape` after numpy broadcasting."""
    extra = g.data.ndim - len(shape)
    if extra > 0:
        g = tsum(g, axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.data.shape[i] != 1)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    return g


# -- arithmetic -------------------------------------------------------------


def add(a, b):
    b = _lift(b, a)
    return _node(
        a.data + b.data,
        (
            (a, lambda g: _unbroadcast(g, a.data.shape)),
            (b, lambda g: _unbroadcast(g, b.data.shape)),
        ),
    )


def sub(a, b):
    b = _lift(b, a)
    return _node(
        a.data - b.data,
        (
            (a, lambda g: _unbroadcast(g, a.data.shape)),
            (b, lambda g: _unbroadcast(neg(g), b.data.shape)),
        ),
    )


def neg(a):
    return _node(-a.data, ((a, lambda g: neg(g)),))


def mul(a, b):
    b = _lift(b, a)
    return _node(
        a.data * b.data,
        (
            (a, lambda g: _unbroadcast(mul(g, b), a.data.shape)),
            (b, lambda g: _unbroadcast(mul(g, a), b.data.shape)),
        ),
    )


def div(a, b):
    b = _lift(b, a)
    return _node(
        a.data / b.data,
        (
            (a, lambda g: _unbroadcast(div(g, b), a.data.shape)),
            (b, lambda g: _unbroadcast(neg(div(mul(g, a), mul(b, b))), b.data.shape)),
        ),
    )


def power(a, p):
    if isinstance(p, Tensor):
        raise TypeError("only constant exponents are supported")
    p = float(p)
    return _node(a.data**p, ((a, lambda g: mul(g, mul(power(a, p - 1.0), p))),))


def square(a):
    return mul(a, a)


def exp(a):
    out = _node(np.exp(a.data), ())
    edges = ((a, lambda g: mul(g, out)),)
    return _attach(out, edges)


def log(a):
    return _node(np.log(a.data), ((a, lambda g: div(g, a)),))


def sqrt(a):
    out = _node(np.sqrt(a.data), ())
    edges = ((a, lambda g: div(g, mul(out, 2.0))),)
    return _attach(out, edges)


def _attach(out, edges):
    # for ops whose VJP refers to the output tensor itself
    if _GRAD_ENABLED:
        kept = tuple(e for e in edges if e[0].requires_grad)
        if kept:
            out._edges = kept
            out.requires_grad = True
    return out


# -- activations ------------------------------------------------------------


def tanh(a):
    out = _node(np.tanh(a.data), ())
    edges = ((a, lambda g: mul(g, sub(const(np.float64(1.0).astype(a.data.dtype)), mul(out, out)))),)
    return _attach(out, edges)


def sigmoid(a):
    # numerically stable logistic
    x = a.data
    out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out_data = out_data.astype(x.dtype, copy=False)
    out = _node(out_data, ())
    edges = ((a, lambda g: mul(g, mul(out, sub(const(np.float64(1.0).astype(x.dtype)), out)))),)
    return _attach(out, edges)


def leaky_relu(a, slope=0.01):
    x = a.data
    mask = np.where(x > 0, x.dtype.type(1.0), x.dtype.type(slope))
    return _node(x * mask, ((a, lambda g: mul(g, const(mask))),))


def identity(a):
    return a


# -- shape ops --------------------------------------------------------------


def matmul(a, b):
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.data.shape} @ {b.data.shape}")
    if a.data.shape[1] != b.data.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.data.shape} @ {b.data.shape}")
    return _node(
        a.data @ b.data,
        (
            (a, lambda g: matmul(g, transpose(b))),
            (b, lambda g: matmul(transpose(a), g)),
        ),
    )


def transpose(a):
    return _node(a.data.T, ((a, lambda g: transpose(g)),))


def reshape(a, shape):
    old = a.data.shape
    return _node(a.data.reshape(shape), ((a, lambda g: reshape(g, old)),))


def getitem(a, key):
    return _node(a.data[key], ((a, lambda g: _scatter(g, a.data.shape, key)),))


def _scatter(g, shape, key):
    def vjp(gg):
        return getitem(gg, key)

    buf = np.zeros(shape, dtype=g.data.dtype)
    buf[key] = g.data
    return _node(buf, ((g, vjp),))


def concat(tensors, axis=0):
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat of zero tensors")
    datas = [t.data for t in tensors]
    for d in datas[1:]:
        if d.ndim != datas[0].ndim:
            raise ShapeError(f"concat rank mismatch: {[x.shape for x in datas]}")
    out_data = np.concatenate(datas, axis=axis)
    edges = []
    start = 0
    for t in tensors:
        n = t.data.shape[axis]
        sl = [slice(None)] * out_data.ndim
        sl[axis] = slice(start, start + n)
        edges.append((t, (lambda key: lambda g: getitem(g, key))(tuple(sl))))
        start += n
    return _node(out_data, tuple(edges))


# -- reductions -------------------------------------------------------------


def tsum(a, axis=None, keepdims=False):
    out_data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        gd = g
        if axis is not None and not keepdims:
            axes = (axis,) if isinstance(axis, int) else tuple(axis)
            shp = list(a.data.shape)
            for ax in axes:
                shp[ax % a.data.ndim] = 1
            gd = reshape(g, tuple(shp))
        return mul(gd, const(np.ones(a.data.shape, dtype=a.data.dtype)))

    return _node(out_data, ((a, vjp),))


def tmean(a, axis=None, keepdims=False):
    if axis is None:
        n = a.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else tuple(axis)
        n = 1
        for ax in axes:
            n *= a.data.shape[ax]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def l2norm(a, axis=None, keepdims=False):
    """Euclidean norm, composed from primitives (sqrt of sum of squares)."""
    return sqrt(tsum(square(a), axis=axis, keepdims=keepdims))


# -- backward ---------------------------------------------------------------


def _toposort(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent, _ in node._edges:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order  # parents before children


def grad(output, inputs, create_graph=False, grad_output=None):
    """Reverse-mode gradients of scalar `output` w.r.t. each of `inputs`.

    Returns one tensor per input (zeros for inputs the output does not
    depend on). With create_graph=True the returned gradients carry their
    own graph, so they can be differentiated again.
    """
    if output.data.size != 1 and grad_output is None:
        raise ShapeError(f"grad of non-scalar output (shape {output.data.shape}) needs grad_output")
    for x in inputs:
        if not isinstance(x, Tensor):
            raise TypeError("inputs must be tensors")

    order = _toposort(output)
    wanted = {id(x) for x in inputs}
    needed = set()
    for node in order:  # parents first: a node is needed if it is wanted or feeds one
        if id(node) in wanted:
            needed.add(id(node))
    for node in order:
        if any(id(p) in needed for p, _ in node._edges):
            needed.add(id(node))

    grads = {}
    if grad_output is None:
        seed = Tensor(np.ones_like(output.data))
    else:
        seed = grad_output if isinstance(grad_output, Tensor) else const(grad_output)
    grads[id(output)] = seed

    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = bool(create_graph)
    try:
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if id(node) in wanted:
                grads[id(node)] = g  # keep for the result
            for parent, vjp in node._edges:
                if id(parent) not in needed:
                    continue
                contrib = vjp(g)
                prev_g = grads.get(id(parent))
                grads[id(parent)] = contrib if prev_g is None else add(prev_g, contrib)
    finally:
        _GRAD_ENABLED = prev

    out = []
    for x in inputs:
        g = grads.get(id(x))
        if g is None:
            g = Tensor(np.zeros_like(x.data))
        out.append(g)
    return out
