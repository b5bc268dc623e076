"""Gradient ground-truthing and study tools around the optimizers.

Covers: bias/variance of the surrogate gradient against a true-gradient
oracle, a Monte Carlo oracle for problems without analytic gradients, the
box-width selection heuristic, and hyperparameter grid sweeps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import NumDiffConfig, ScoreFnConfig, run_numdiff, run_score_fn
from .loop import LgsoConfig, run_lgso
from .problems import Problem, analytic_gradient
from .sampling import NeighborhoodSpec, lhs_sample
from .surrogate import surrogate_grad, train_surrogate

ORACLE_SAMPLES = 1_000_000
ORACLE_H = 0.05


def oracle_gradient(problem: Problem, psi, rng=None, h=ORACLE_H,
                    n_samples=ORACLE_SAMPLES):
    """Reference gradient of the expected objective at psi.

    Problems with an analytic gradient use it directly. Otherwise the
    gradient is estimated by central differences of the expected objective,
    with the same random stream replayed on the +h and -h probes so the
    simulator noise cancels.
    """
    psi = np.asarray(psi, dtype=float)
    if problem.analytic_gradient is not None:
        return analytic_gradient(problem, psi)
    if rng is None:
        raise ValueError(f"problem {problem.name!r} needs an rng for its Monte Carlo oracle")
    seeds = rng.integers(0, 2**63 - 1, size=psi.size)
    grad = np.empty(psi.size)
    for i in range(psi.size):
        estimates = []
        for sign in (1.0, -1.0):
            probe_rng = np.random.default_rng(seeds[i])
            shifted = psi.copy()
            shifted[i] += sign * h
            xs = problem.sample_x(probe_rng, n_samples)
            ys = problem.simulate(shifted, xs, probe_rng)
            estimates.append(float(problem.objective(ys, xs)))
        grad[i] = (estimates[0] - estimates[1]) / (2.0 * h)
    return grad


@dataclass
class BiasEntry:
    """Bias/variance of the surrogate gradient at one parameter point."""

    psi: np.ndarray
    true_gradient: np.ndarray
    samples: np.ndarray  # (repeats, dim) surrogate gradient estimates
    bias: np.ndarray
    variance: np.ndarray

    @property
    def repeats(self):
        return self.samples.shape[0]


def aggregate_bias(samples, true_gradient):
    """Componentwise mean of (true - estimate) and unbiased variance."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape[0] < 2:
        raise ValueError(f"need at least 2 repeats, got {samples.shape[0]}")
    b = np.asarray(true_gradient, dtype=float) - samples
    return b.mean(axis=0), b.var(axis=0, ddof=1)


def estimate_bias_variance(problem: Problem, psi, repeats, config: LgsoConfig,
                           rng, true_gradient=None) -> BiasEntry:
    """Retrain `repeats` independent surrogates at psi and compare their
    gradients against the oracle.

    Each repeat gets fresh design points, fresh simulations, and a fresh
    weight init; no history is shared between repeats.
    """
    if repeats < 2:
        raise ValueError(f"repeats must be >= 2, got {repeats}")
    psi = np.asarray(psi, dtype=float)
    if true_gradient is None:
        true_gradient = oracle_gradient(problem, psi, rng)
    samples = np.empty((repeats, psi.size))
    children = rng.spawn(repeats)
    for r, child in enumerate(children):
        box = NeighborhoodSpec(center=psi, epsilon=config.epsilon, count=config.n_psi)
        psi_points = lhs_sample(box, child)
        parts = []
        for point in psi_points:
            xs = problem.sample_x(child, config.m_x)
            ys = problem.simulate(point, xs, child)
            parts.append((np.tile(point, (config.m_x, 1)), xs, ys))
        records = tuple(np.concatenate(a) for a in zip(*parts))
        model = train_surrogate(records, config.surrogate, child)
        est = surrogate_grad(model, psi, config.k_grad, problem.sample_x,
                             problem.objective_t, child)
        samples[r] = est.gradient
    bias, variance = aggregate_bias(samples, true_gradient)
    return BiasEntry(psi=psi, true_gradient=np.asarray(true_gradient, dtype=float),
                     samples=samples, bias=bias, variance=variance)


@dataclass
class EpsilonSuggestion:
    epsilon: float | None  # None when no candidate passes
    rows: list = field(default_factory=list)  # per-candidate diagnostics


def suggest_epsilon(problem: Problem, psi, grid, rng, n_eval=100, pairs=20) -> EpsilonSuggestion:
    """Smallest box half-width whose mean objective shift across the box
    exceeds the variance of the objective estimate at the center.

    Both sides of the comparison use n_eval-sample objective estimates,
    the same granularity the optimizers work with.
    """
    grid = [float(e) for e in grid]
    if not grid or any(e <= 0 for e in grid):
        raise ValueError("grid must be non-empty with positive entries")
    if sorted(grid) != grid:
        raise ValueError("grid must be ascending")
    psi = np.asarray(psi, dtype=float)

    def estimate(point, r):
        xs = problem.sample_x(r, n_eval)
        ys = problem.simulate(point, xs, r)
        return float(problem.objective(ys, xs))

    center = np.array([estimate(psi, rng) for _ in range(pairs)])
    rhs = float(center.var(ddof=1))
    rows = []
    chosen = None
    for eps in grid:
        diffs = []
        for i in range(psi.size):
            for _ in range(pairs):
                lo, hi = psi.copy(), psi.copy()
                lo[i] -= eps
                hi[i] += eps
                diffs.append(abs(estimate(lo, rng) - estimate(hi, rng)))
        lhs = float(np.mean(diffs))
        passed = lhs > rhs
        rows.append({"epsilon": eps, "shift": lhs, "variance": rhs, "passed": passed})
        if passed and chosen is None:
            chosen = eps
    return EpsilonSuggestion(epsilon=chosen, rows=rows)


RUNNERS = {
    "lgso": (LgsoConfig, run_lgso),
    "numdiff": (NumDiffConfig, run_numdiff),
    "score_fn": (ScoreFnConfig, run_score_fn),
}


@dataclass
class SweepCell:
    coords: dict
    final_objective: float
    calls_to_converge: float
    converged: bool
    status: str
    per_seed: list = field(default_factory=list)


def run_sweep(problem: Problem, grid: dict, base_config, method="lgso",
              seeds=(0,), parallelism=1) -> list[SweepCell]:
    """Run the chosen optimizer on every grid cell with the same seed set.

    Grid keys are config field names. Per-cell failures are recorded in the
    cell's status and the sweep continues.
    """
    if method not in RUNNERS:
        raise ValueError(f"unknown method {method!r}, expected one of {sorted(RUNNERS)}")
    config_cls, runner = RUNNERS[method]
    for key in grid:
        if key not in config_cls.__dataclass_fields__:
            raise ValueError(f"unknown {method} config field {key!r} in sweep grid")
    keys = sorted(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        coords = dict(zip(keys, values))
        finals, calls, convs = [], [], []
        status = "ok"
        try:
            for seed in seeds:
                cfg = replace(base_config, seed=seed, **coords)
                trace = runner(problem, cfg, parallelism)
                if trace.aborted is not None or not trace.entries:
                    raise RuntimeError(trace.aborted or "empty trace")
                finals.append(trace.final_objective)
                calls.append(trace.total_calls)
                convs.append(trace.stop_reason == "converged")
        except Exception as err:  # per-cell isolation is the contract
            cells.append(SweepCell(coords=coords, final_objective=math.nan,
                                   calls_to_converge=math.nan, converged=False,
                                   status=f"failed: {err}"))
            continue
        cells.append(SweepCell(
            coords=coords,
            final_objective=float(np.mean(finals)),
            calls_to_converge=float(np.mean(calls)),
            converged=all(convs),
            status=status,
            per_seed=list(zip(finals, calls)),
        ))
    return cells
