"""Benchmark problems: stochastic simulators, objectives, and oracle pieces.

Each problem bundles a parameter vector psi, an input distribution q(x), a
simulator y = F(x; psi) reachable only through evaluation, and an objective
R over y-batches. Objectives exist twice: a plain numpy form and a tensor
form used when differentiating through a surrogate.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .engine import Tensor, const, grad, sigmoid, sqrt, square, tanh as t_tanh

__all__ = [
    "Problem",
    "BostonDataset",
    "hump_h",
    "three_hump_simulate",
    "three_hump_objective",
    "rosenbrock_f",
    "rosenbrock_grad",
    "rosenbrock_simulate",
    "generate_mixing_matrix",
    "boston_nn_simulate",
    "boston_objective",
    "load_boston_csv",
    "analytic_expected_objective",
    "analytic_gradient",
    "get_problem",
    "list_problems",
]


@dataclass
class Problem:
    """A stochastic black-box benchmark.

    simulate(psi, xs, rng) maps a batch of inputs to outcomes; one row of
    xs is one simulator call for the toys, while the Boston problem counts
    a full 506-row pass as one call (calls_per_sample = 1/506).
    """

    name: str
    dim: int
    x_dim: int
    y_dim: int
    psi_init: np.ndarray
    epsilon: float
    sample_x: Callable[[np.random.Generator, int], np.ndarray]
    simulate: Callable[[np.ndarray, np.ndarray, np.random.Generator], np.ndarray]
    objective: Callable[..., float]
    objective_t: Callable[[Tensor, np.ndarray], Tensor]
    calls_per_sample: float = 1.0
    analytic_expected_objective: Optional[Callable[[np.ndarray], float]] = None
    analytic_gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None


# -- probabilistic three hump ----------------------------------------------


def hump_h(psi):
    p1, p2 = float(psi[0]), float(psi[1])
    return 2.0 * p1**2 - 1.05 * p1**4 + p1**6 / 6.0 + p1 * p2 + p2**2


def three_hump_simulate(psi, xs, rng):
    """Mixture-branch hump simulator: pick x1 or x2, then two noise layers."""
    psi = np.asarray(psi, dtype=float)
    norm = float(np.linalg.norm(psi))
    if norm == 0.0:
        raise ValueError("mixture weight undefined: psi has zero norm")
    p = min(max(psi[0] / norm, 0.0), 1.0)
    h = hump_h(psi)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != 2:
        raise ValueError(f"expected inputs of shape (n, 2), got {xs.shape}")
    n = xs.shape[0]
    pick_first = rng.random(n) < p
    xi = np.where(pick_first, xs[:, 0], xs[:, 1])
    mu = xi * h + rng.standard_normal(n)
    y = mu + rng.standard_normal(n)
    return y.reshape(n, 1)


def three_hump_objective(ys):
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if ys.size == 0:
        raise ValueError("objective of an empty batch")
    return float(np.mean(expit(ys - 10.0) - expit(ys)))


def _three_hump_objective_t(y, xs=None):
    return (sigmoid(y - 10.0) - sigmoid(y)).mean()


def _hump_sample_x(rng, n):
    x1 = rng.uniform(-2.0, 0.0, size=n)
    x2 = rng.uniform(2.0, 5.0, size=n)
    return np.column_stack([x1, x2])


# -- rosenbrock family ------------------------------------------------------


def rosenbrock_f(psi):
    psi = np.asarray(psi, dtype=float)
    if psi.size < 2:
        raise ValueError("rosenbrock needs at least 2 dimensions")
    d = psi[:-1] - psi[1:]
    return float(np.sum(d**2 + (1.0 - psi[:-1]) ** 2))


def rosenbrock_grad(psi):
    psi = np.asarray(psi, dtype=float)
    if psi.size < 2:
        raise ValueError("rosenbrock needs at least 2 dimensions")
    g = np.zeros_like(psi)
    d = psi[:-1] - psi[1:]
    g[:-1] += 2.0 * d - 2.0 * (1.0 - psi[:-1])
    g[1:] -= 2.0 * d
    return g


def rosenbrock_simulate(psi, xs, rng):
    f = rosenbrock_f(psi)
    xs = np.asarray(xs, dtype=float).reshape(-1)
    return (f + xs + rng.standard_normal(xs.size)).reshape(-1, 1)


def _rosenbrock_sample_x(rng, n):
    mu = rng.uniform(-10.0, 10.0, size=n)
    return (mu + rng.standard_normal(n)).reshape(n, 1)


def _mean_objective(ys, xs=None):
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if ys.size == 0:
        raise ValueError("objective of an empty batch")
    return float(np.mean(ys))


def _mean_objective_t(y, xs=None):
    return y.mean()


# -- mixing matrices ---------------------------------------------------------


def generate_mixing_matrix(in_dim, out_dim, seed=1337):
    """Orthonormal-column in_dim x out_dim matrix from QR of a seeded normal draw."""
    if in_dim <= out_dim:
        raise ValueError(f"in_dim must exceed out_dim, got {in_dim} <= {out_dim}")
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((in_dim, out_dim)))
    return q


# -- boston housing network --------------------------------------------------


@dataclass
class BostonDataset:
    features: np.ndarray  # (506, 13)
    targets: np.ndarray  # (506,)


# Layer layout of the 91-vector: 6x13 weights, 6 biases, 1x6 weights, 1 bias.
_BOSTON_SPLITS = (78, 84, 90, 91)


def _boston_forward(psi, xs):
    psi = np.asarray(psi, dtype=float)
    if psi.size != 91:
        raise ValueError(f"boston psi must have 91 components, got {psi.size}")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if xs.shape[1] != 13:
        raise ValueError(f"expected inputs of shape (n, 13), got {xs.shape}")
    w1 = psi[: _BOSTON_SPLITS[0]].reshape(6, 13)
    b1 = psi[_BOSTON_SPLITS[0] : _BOSTON_SPLITS[1]]
    w2 = psi[_BOSTON_SPLITS[1] : _BOSTON_SPLITS[2]].reshape(1, 6)
    b2 = psi[_BOSTON_SPLITS[2]]
    return (np.tanh(xs @ w1.T + b1) @ w2.T + b2).reshape(-1, 1)


def boston_nn_simulate(psi, dataset):
    """Deterministic predictions for every record of the dataset."""
    return _boston_forward(psi, dataset.features).reshape(-1)


def boston_objective(y, targets):
    y = np.asarray(y, dtype=float).reshape(-1)
    targets = np.asarray(targets, dtype=float).reshape(-1)
    if y.size != targets.size:
        raise ValueError(f"prediction/target length mismatch: {y.size} != {targets.size}")
    return float(np.sqrt(np.mean((y - targets) ** 2)))


def load_boston_csv(path):
    """14 numeric columns (13 features then target), optional header, 506 rows."""
    rows = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                values = [float(v) for v in row]
            except ValueError:
                if i == 0:
                    continue  # header line
                raise ValueError(f"non-numeric row {i} in {path}")
            if len(values) != 14:
                raise ValueError(f"row {i} of {path} has {len(values)} columns, expected 14")
            rows.append(values)
    if len(rows) != 506:
        raise ValueError(f"{path} has {len(rows)} records, expected 506")
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path} contains non-finite values")
    return BostonDataset(features=arr[:, :13], targets=arr[:, 13])


def _default_boston_path():
    return resources.files("lgso") / "data" / "boston_synthetic.csv"


# Initial network weights for the Boston problem (fixed published values).
BOSTON_PSI_INIT = np.array([
    0.0215, 0.0763, 0.0879, 0.0102,
    0.095, 0.0508, 0.088, 0.101,
    0.0782, 0.0684, 0.0658, 0.0509,
    0.0207, 0.0618, 0.0756, 0.00784,
    0.0968, 0.0685, 0.0113, 0.0745,
    0.00154, 0.0772, 0.0472, 0.000906,
    0.0723, 0.0779, 0.0594, 0.0785,
    0.0918, 0.0634, 0.0853, 0.105,
    0.00407, 0.0789, 0.0035, 0.0581,
    0.0375, 0.0632, 0.0669, 0.00293,
    0.0901, 0.0208, 0.0388, 0.0893,
    0.00104, 0.0598, 0.0745, 0.08,
    0.0283, 0.0106, 0.0371, 0.0667,
    0.0331, 0.0356, 0.0661, 0.0554,
    0.084, 0.0398, 0.00286, 0.0281,
    0.0246, 0.0208, 0.0358, 0.033,
    0.0421, 0.0505, 0.00544, 0.0269,
    0.00527, 0.0569, 0.00538, 0.0786,
    0.102, 0.0452, 0.0444, 0.105,
    0.0765, 0.0689, 0.0249, 0.0933,
    0.037, 0.0762, 0.0882, 0.0505,
    0.0688, 0.0666, 0.101, 0.0857,
    0.0488, 0.0303, 22.5328,
])


# -- registry ----------------------------------------------------------------


def _build_three_hump():
    return Problem(
        name="three_hump",
        dim=2,
        x_dim=2,
        y_dim=1,
        psi_init=np.array([2.0, 1.0]),
        epsilon=0.5,
        sample_x=_hump_sample_x,
        simulate=three_hump_simulate,
        objective=lambda ys, xs=None: three_hump_objective(ys),
        objective_t=_three_hump_objective_t,
    )


def _build_rosenbrock(dim=10):
    return Problem(
        name="rosenbrock",
        dim=dim,
        x_dim=1,
        y_dim=1,
        psi_init=np.full(dim, 2.0),
        epsilon=0.2,
        sample_x=_rosenbrock_sample_x,
        simulate=rosenbrock_simulate,
        objective=_mean_objective,
        objective_t=_mean_objective_t,
        analytic_expected_objective=rosenbrock_f,
        analytic_gradient=rosenbrock_grad,
    )


def _build_submanifold_rosenbrock(dim=100, latent_dim=10, seed=1337):
    q = generate_mixing_matrix(dim, latent_dim, seed)

    def simulate(psi, xs, rng):
        return rosenbrock_simulate(q.T @ np.asarray(psi, dtype=float), xs, rng)

    return Problem(
        name="submanifold_rosenbrock",
        dim=dim,
        x_dim=1,
        y_dim=1,
        psi_init=np.full(dim, 2.0),
        epsilon=0.2,
        sample_x=_rosenbrock_sample_x,
        simulate=simulate,
        objective=_mean_objective,
        objective_t=_mean_objective_t,
        analytic_expected_objective=lambda psi: rosenbrock_f(q.T @ np.asarray(psi, dtype=float)),
        analytic_gradient=lambda psi: q @ rosenbrock_grad(q.T @ np.asarray(psi, dtype=float)),
    )


def _build_nonlinear_submanifold_hump(dim=40, hidden_dim=16, seed=1337):
    a = generate_mixing_matrix(dim, hidden_dim, seed).T  # 16 x 40
    b = generate_mixing_matrix(hidden_dim, 2, seed).T  # 2 x 16

    def embed(psi):
        return b @ np.tanh(a @ np.asarray(psi, dtype=float))

    def simulate(psi, xs, rng):
        return three_hump_simulate(embed(psi), xs, rng)

    return Problem(
        name="nonlinear_submanifold_hump",
        dim=dim,
        x_dim=2,
        y_dim=1,
        psi_init=np.full(dim, 0.5),
        epsilon=0.2,
        sample_x=_hump_sample_x,
        simulate=simulate,
        objective=lambda ys, xs=None: three_hump_objective(ys),
        objective_t=_three_hump_objective_t,
    )


def _build_boston_nn(csv_path=None):
    if csv_path is None:
        csv_path = _default_boston_path()
    dataset = load_boston_csv(csv_path)
    lookup = {row.tobytes(): float(t) for row, t in zip(dataset.features, dataset.targets)}

    def targets_for(xs):
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        try:
            return np.array([lookup[row.tobytes()] for row in xs])
        except KeyError:
            raise ValueError("input row is not a dataset record; boston draws x from the dataset")

    def sample_x(rng, n):
        idx = rng.integers(0, dataset.features.shape[0], size=n)
        return dataset.features[idx]

    def simulate(psi, xs, rng):
        return _boston_forward(psi, xs)

    def objective(ys, xs):
        return boston_objective(np.asarray(ys).reshape(-1), targets_for(xs))

    def objective_t(y, xs):
        t = const(targets_for(xs).reshape(-1, 1))
        return sqrt(square(y - t).mean())

    def expected_objective(psi):
        return boston_objective(boston_nn_simulate(psi, dataset), dataset.targets)

    def exact_gradient(psi):
        # RMSE of the tanh net is smooth; differentiate it directly
        p = Tensor(np.asarray(psi, dtype=float), requires_grad=True)
        w1 = p[:78].reshape((6, 13))
        b1 = p[78:84].reshape((1, 6))
        w2 = p[84:90].reshape((6, 1))
        b2 = p[90:91].reshape((1, 1))
        x = const(dataset.features)
        pred = t_tanh(x @ w1.T + b1) @ w2 + b2
        loss = sqrt(square(pred - const(dataset.targets.reshape(-1, 1))).mean())
        return grad(loss, [p])[0].data

    return Problem(
        name="boston_nn",
        dim=91,
        x_dim=13,
        y_dim=1,
        psi_init=BOSTON_PSI_INIT.copy(),
        epsilon=0.2,
        sample_x=sample_x,
        simulate=simulate,
        objective=objective,
        objective_t=objective_t,
        calls_per_sample=1.0 / 506.0,
        analytic_expected_objective=expected_objective,
        analytic_gradient=exact_gradient,
    )


_BUILDERS = {
    "three_hump": _build_three_hump,
    "rosenbrock": _build_rosenbrock,
    "submanifold_rosenbrock": _build_submanifold_rosenbrock,
    "nonlinear_submanifold_hump": _build_nonlinear_submanifold_hump,
    "boston_nn": _build_boston_nn,
}


def list_problems():
    return sorted(_BUILDERS)


def get_problem(name, **kwargs):
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}, known: {', '.join(sorted(_BUILDERS))}")
    return builder(**kwargs)


def analytic_expected_objective(problem, psi):
    if problem.analytic_expected_objective is None:
        raise ValueError(f"problem {problem.name!r} has no analytic expected objective")
    return problem.analytic_expected_objective(psi)


def analytic_gradient(problem, psi):
    if problem.analytic_gradient is None:
        raise ValueError(f"problem {problem.name!r} has no analytic gradient")
    return problem.analytic_gradient(psi)
