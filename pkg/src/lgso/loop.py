"""Surrogate-based optimization loop.

Each iteration samples a Latin hypercube design in the box around the
current parameter point, runs the simulator there, trains a fresh local
surrogate on every stored record inside the box, and takes one Adam step
along the surrogate gradient. Simulator cost is tracked as the number of
calls, scaled by the problem's calls_per_sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .engine import AdamState, adam_update
from .problems import Problem
from .sampling import History, NeighborhoodSpec, lhs_sample
from .surrogate import (
    SurrogateConfig,
    SurrogateTrainingError,
    surrogate_grad,
    train_surrogate,
)
from .surrogate.monitor import MONITOR_KEYS

# purpose tags for per-iteration RNG streams
_LHS, _SIM, _TRAIN, _GRAD = 0, 1, 2, 3


def stream(*path):
    """Deterministic generator for a tuple of non-negative integers.

    Streams are independent of evaluation order, so fanning work out over
    threads cannot change any result.
    """
    return np.random.default_rng(list(path))


@dataclass
class LgsoConfig:
    n_psi: int
    m_x: int = 100
    k_grad: int = 512
    epsilon: float = 0.2
    learning_rate: float = 0.1
    max_iterations: int = 200
    convergence_window: int = 20
    convergence_tol: float = 1e-3
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)
    seed: int = 0
    use_history: bool = True
    history_cap: int | None = 4096
    budget: float | None = None

    def __post_init__(self):
        for name in ("n_psi", "m_x", "k_grad"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if self.convergence_window < 1:
            raise ValueError(f"convergence_window must be >= 1, got {self.convergence_window}")
        if self.budget is not None and self.budget < 0:
            raise ValueError(f"budget must be >= 0, got {self.budget}")
        if self.history_cap is not None and self.history_cap < 1:
            raise ValueError(f"history_cap must be >= 1, got {self.history_cap}")


def default_config_for(problem: Problem, **overrides) -> LgsoConfig:
    """Per-problem defaults: the problem's own box half-width, N = dim."""
    cfg = LgsoConfig(n_psi=problem.dim, epsilon=problem.epsilon)
    return replace(cfg, **overrides) if overrides else cfg


@dataclass
class TraceEntry:
    iteration: int
    cum_calls: float
    objective_sim: float
    objective_surr: float
    grad_norm: float
    psi: np.ndarray
    monitor: dict

    def monitor_values(self):
        return [self.monitor.get(k, math.nan) for k in MONITOR_KEYS]


@dataclass
class OptTrace:
    problem: str
    method: str
    psi_dim: int
    entries: list = field(default_factory=list)
    stop_reason: str = "max_iterations"
    aborted: str | None = None

    def columns(self):
        return (["iteration", "cum_calls", "objective_sim", "objective_surr", "grad_norm"]
                + [f"psi_{i}" for i in range(self.psi_dim)] + list(MONITOR_KEYS))

    @property
    def final_psi(self):
        return self.entries[-1].psi

    @property
    def final_objective(self):
        return self.entries[-1].objective_sim

    @property
    def total_calls(self):
        return self.entries[-1].cum_calls if self.entries else 0.0


def empty_monitor():
    return {k: math.nan for k in MONITOR_KEYS}


def converged(objectives, window, tol):
    """Moving-average plateau: the last window improved the previous one
    by less than `tol` relative."""
    if len(objectives) < 2 * window:
        return False
    recent = float(np.mean(objectives[-window:]))
    prev = float(np.mean(objectives[-2 * window:-window]))
    denom = max(abs(prev), 1e-12)
    return (prev - recent) / denom < tol


def simulate_blocks(problem, psi_points, m, seed_path, parallelism=1):
    """Run the simulator for m draws at each psi point.

    One RNG stream per point, keyed by its index, so any fan-out degree
    produces identical records.
    """

    def block(j):
        rng = stream(*seed_path, j)
        xs = problem.sample_x(rng, m)
        ys = problem.simulate(psi_points[j], xs, rng)
        return xs, ys

    indices = range(len(psi_points))
    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(block, indices))
    return [block(j) for j in indices]


def run_lgso(problem: Problem, config: LgsoConfig, parallelism: int = 1) -> OptTrace:
    psi = np.array(problem.psi_init, dtype=float)
    if psi.size != problem.dim:
        raise ValueError(f"psi_init has {psi.size} components, problem dim is {problem.dim}")
    trace = OptTrace(problem=problem.name, method="lgso", psi_dim=problem.dim)
    history = History(problem.dim, problem.x_dim, problem.y_dim)
    adam = AdamState(lr=config.learning_rate)
    params = {"psi": psi}
    seed = config.seed
    cum_calls = 0.0
    calls_per_iter = config.n_psi * config.m_x * problem.calls_per_sample
    objectives = []

    for it in range(1, config.max_iterations + 1):
        if config.budget is not None and cum_calls + calls_per_iter > config.budget + 1e-9:
            trace.stop_reason = "budget"
            return trace
        psi = params["psi"]
        box = NeighborhoodSpec(center=psi, epsilon=config.epsilon, count=config.n_psi)
        psi_points = lhs_sample(box, stream(seed, it, _LHS))
        blocks = simulate_blocks(problem, psi_points, config.m_x, (seed, it, _SIM), parallelism)
        for j, (xs, ys) in enumerate(blocks):
            history.append_group(psi_points[j], xs, ys, iteration=it)
        cum_calls += calls_per_iter
        fresh_xs = np.concatenate([xs for xs, _ in blocks])
        fresh_ys = np.concatenate([ys for _, ys in blocks])
        objective_sim = float(problem.objective(fresh_ys, fresh_xs))

        if config.use_history:
            ball_psis, ball_xs, ball_ys, _ = history.query_ball(psi, config.epsilon)
            cap = config.history_cap
            if cap is not None and len(ball_ys) > cap:
                # keep per-iteration training cost bounded once the walk
                # stalls and the box fills up; newest records win
                ball_psis, ball_xs, ball_ys = ball_psis[-cap:], ball_xs[-cap:], ball_ys[-cap:]
            records = (ball_psis, ball_xs, ball_ys)
        else:
            records = (np.repeat(psi_points, config.m_x, axis=0), fresh_xs, fresh_ys)

        est = None
        failure = None
        for attempt in (0, 1):
            try:
                model = train_surrogate(records, config.surrogate, stream(seed, it, _TRAIN, attempt))
                est = surrogate_grad(model, psi, config.k_grad, problem.sample_x,
                                     problem.objective_t, stream(seed, it, _GRAD, attempt))
                break
            except (SurrogateTrainingError, FloatingPointError) as err:
                failure = err
        if est is None:
            trace.stop_reason = "aborted"
            trace.aborted = f"iteration {it}: {failure}"
            return trace

        params, adam = adam_update(params, {"psi": est.gradient}, adam)
        trace.entries.append(TraceEntry(
            iteration=it,
            cum_calls=cum_calls,
            objective_sim=objective_sim,
            objective_surr=est.objective,
            grad_norm=float(np.linalg.norm(est.gradient)),
            psi=params["psi"].copy(),
            monitor=dict(model.meta.get("monitor", empty_monitor())),
        ))
        objectives.append(objective_sim)
        if converged(objectives, config.convergence_window, config.convergence_tol):
            trace.stop_reason = "converged"
            return trace

    trace.stop_reason = "max_iterations"
    return trace
