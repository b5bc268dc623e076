"""Comparison optimizers on the same trace contract as the surrogate loop.

Two methods: central-difference numerical optimization and a Gaussian-policy
score-function (REINFORCE) optimizer. Both treat the simulator as a black
box, evaluation only.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .engine import AdamState, adam_update
from .loop import OptTrace, TraceEntry, converged, empty_monitor, stream
from .problems import Problem
from .surrogate.gradient import GradEstimate

SIGMA_FLOOR = 1e-6


@dataclass
class NumDiffConfig:
    h: float = 0.1
    n_eval: int = 100
    learning_rate: float = 0.1
    max_iterations: int = 200
    convergence_window: int = 20
    convergence_tol: float = 1e-3
    seed: int = 0
    budget: float | None = None

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError(f"h must be positive, got {self.h}")
        if self.n_eval < 1:
            raise ValueError(f"n_eval must be >= 1, got {self.n_eval}")


@dataclass
class ScoreFnConfig:
    samples: int = 10
    n_eval: int = 100
    learning_rate: float = 0.1
    sigma_init: float = 0.1
    baseline_decay: float = 0.9
    max_iterations: int = 2000
    convergence_window: int = 20
    convergence_tol: float = 1e-3
    seed: int = 0
    budget: float | None = None

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError(f"samples must be >= 2, got {self.samples}")
        if self.sigma_init <= 0.0:
            raise ValueError(f"sigma_init must be positive, got {self.sigma_init}")
        if not 0.0 <= self.baseline_decay < 1.0:
            raise ValueError(f"baseline_decay must be in [0, 1), got {self.baseline_decay}")


def _mean_objective(problem, psi, n_eval, rng):
    xs = problem.sample_x(rng, n_eval)
    ys = problem.simulate(psi, xs, rng)
    return float(problem.objective(ys, xs))


def _fan_out(fn, count, parallelism):
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(fn, range(count)))
    return [fn(j) for j in range(count)]


def numdiff_gradient(problem: Problem, psi, config: NumDiffConfig, rng,
                     parallelism: int = 1) -> GradEstimate:
    """Central differences with n_eval fresh simulator draws per probe.

    Probe j covers dimension j // 2, sign (+, -) alternating; each probe
    gets its own child stream so fan-out order cannot matter.
    """
    psi = np.asarray(psi, dtype=float)
    d = psi.size
    streams = rng.spawn(2 * d)

    def probe(j):
        i, hi = divmod(j, 2)
        shifted = psi.copy()
        shifted[i] += config.h if hi == 0 else -config.h
        value = _mean_objective(problem, shifted, config.n_eval, streams[j])
        if not math.isfinite(value):
            raise FloatingPointError(f"non-finite objective estimate at probe {j}")
        return value

    values = _fan_out(probe, 2 * d, parallelism)
    grad = np.empty(d)
    for i in range(d):
        grad[i] = (values[2 * i] - values[2 * i + 1]) / (2.0 * config.h)
    return GradEstimate(gradient=grad, k=2 * d * config.n_eval,
                        objective=float(np.mean(values)))


def run_numdiff(problem: Problem, config: NumDiffConfig, parallelism: int = 1) -> OptTrace:
    psi = np.array(problem.psi_init, dtype=float)
    trace = OptTrace(problem=problem.name, method="numdiff", psi_dim=problem.dim)
    adam = AdamState(lr=config.learning_rate)
    params = {"psi": psi}
    calls_per_iter = 2 * problem.dim * config.n_eval * problem.calls_per_sample
    cum_calls = 0.0
    objectives = []

    for it in range(1, config.max_iterations + 1):
        if config.budget is not None and cum_calls + calls_per_iter > config.budget + 1e-9:
            trace.stop_reason = "budget"
            return trace
        try:
            est = numdiff_gradient(problem, params["psi"], config,
                                   stream(config.seed, it), parallelism)
        except FloatingPointError as err:
            trace.stop_reason = "aborted"
            trace.aborted = f"iteration {it}: {err}"
            return trace
        cum_calls += calls_per_iter
        params, adam = adam_update(params, {"psi": est.gradient}, adam)
        trace.entries.append(TraceEntry(
            iteration=it,
            cum_calls=cum_calls,
            objective_sim=est.objective,
            objective_surr=math.nan,
            grad_norm=float(np.linalg.norm(est.gradient)),
            psi=params["psi"].copy(),
            monitor=empty_monitor(),
        ))
        objectives.append(est.objective)
        if converged(objectives, config.convergence_window, config.convergence_tol):
            trace.stop_reason = "converged"
            return trace

    trace.stop_reason = "max_iterations"
    return trace


@dataclass
class GaussianPolicy:
    """Diagonal Gaussian over psi with a moving-average advantage baseline."""

    mu: np.ndarray
    log_sigma: np.ndarray
    baseline: float | None = None

    @property
    def sigma(self):
        return np.exp(self.log_sigma)


def score_fn_gradient(problem: Problem, policy: GaussianPolicy, config: ScoreFnConfig,
                      rng, parallelism: int = 1):
    """REINFORCE gradient of E_psi~N(mu, diag sigma^2)[f(psi)].

    Returns (grad_mu, grad_log_sigma, objective values per policy sample).
    """
    s = config.samples
    sigma = policy.sigma
    draws = policy.mu + sigma * rng.standard_normal((s, policy.mu.size))
    streams = rng.spawn(s)

    def evaluate(j):
        return _mean_objective(problem, draws[j], config.n_eval, streams[j])

    values = np.asarray(_fan_out(evaluate, s, parallelism))
    if not np.all(np.isfinite(values)):
        raise FloatingPointError("non-finite objective estimate in policy batch")
    baseline = policy.baseline if policy.baseline is not None else float(values.mean())
    adv = (values - baseline)[:, None]
    z = (draws - policy.mu) / sigma
    grad_mu = (adv * z / sigma).mean(axis=0)
    grad_log_sigma = (adv * (z * z - 1.0)).mean(axis=0)
    return grad_mu, grad_log_sigma, values


def run_score_fn(problem: Problem, config: ScoreFnConfig, parallelism: int = 1) -> OptTrace:
    policy = GaussianPolicy(
        mu=np.array(problem.psi_init, dtype=float),
        log_sigma=np.full(problem.dim, math.log(config.sigma_init)),
    )
    trace = OptTrace(problem=problem.name, method="score_fn", psi_dim=problem.dim)
    adam = AdamState(lr=config.learning_rate)
    calls_per_iter = config.samples * config.n_eval * problem.calls_per_sample
    cum_calls = 0.0
    objectives = []

    for it in range(1, config.max_iterations + 1):
        if config.budget is not None and cum_calls + calls_per_iter > config.budget + 1e-9:
            trace.stop_reason = "budget"
            return trace
        try:
            g_mu, g_ls, values = score_fn_gradient(problem, policy, config,
                                                   stream(config.seed, it), parallelism)
        except FloatingPointError as err:
            trace.stop_reason = "aborted"
            trace.aborted = f"iteration {it}: {err}"
            return trace
        cum_calls += calls_per_iter
        batch_mean = float(values.mean())
        if policy.baseline is None:
            policy.baseline = batch_mean
        else:
            policy.baseline = (config.baseline_decay * policy.baseline
                               + (1.0 - config.baseline_decay) * batch_mean)
        params = {"mu": policy.mu, "log_sigma": policy.log_sigma}
        params, adam = adam_update(params, {"mu": g_mu, "log_sigma": g_ls}, adam)
        policy.mu = params["mu"]
        policy.log_sigma = params["log_sigma"]
        low = policy.log_sigma < math.log(SIGMA_FLOOR)
        if np.any(low):
            warnings.warn(f"policy std clamped to {SIGMA_FLOOR} on {int(low.sum())} dimensions")
            policy.log_sigma = np.where(low, math.log(SIGMA_FLOOR), policy.log_sigma)
        trace.entries.append(TraceEntry(
            iteration=it,
            cum_calls=cum_calls,
            objective_sim=batch_mean,
            objective_surr=math.nan,
            grad_norm=float(np.linalg.norm(np.concatenate([g_mu, g_ls]))),
            psi=policy.mu.copy(),
            monitor=empty_monitor(),
        ))
        objectives.append(batch_mean)
        if converged(objectives, config.convergence_window, config.convergence_tol):
            trace.stop_reason = "converged"
            return trace

    trace.stop_reason = "max_iterations"
    return trace
