"""The optimization loop: initialize, fit, propose, score, evaluate.

Each outer iteration refits the density flow on every evaluated point,
refits the surrogate to the annealed targets beta * f, generates local
candidates, scores them with the configured acquisition rule, evaluates
the best batch, and updates the annealing level and trust radius. A
random-search baseline shares the trace format.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .acquisition import (
    AF_KINDS,
    dlo_af,
    expected_improvement,
    select_batch,
    thompson_sample,
    upper_confidence_bound,
)
from .flow import SlicedGaussianizationFlow
from .gp import GaussianProcessSurrogate
from .history import EvaluationLog
from .mlp import MLPSurrogate
from .objectives import Objective
from .proposal import TrustState, generate_proposals, update_radius
from .sampling import latin_hypercube, rng_streams
from .schedule import build_schedule


@dataclass
class OptimizerConfig:
    """Everything a single run needs besides the objective itself.

    n_init defaults to twice the dimension when left as None; the
    acquisition kinds 'ei', 'ucb' and 'ts' need the GP surrogate's
    uncertainty and refuse the neural-network surrogate.
    """

    budget: int
    n_init: Optional[int] = None
    batch_size: int = 1
    surrogate: str = "gp"
    af: str = "dlo"
    density_weight: float = 0.01
    ucb_beta: float = 1.0
    bandwidth_factor: float = 1.0
    flow_layers: int = 5
    max_directions: int = 8
    beta_max: float = 100.0
    greedy_fraction: float = 0.5
    anneal: bool = True
    local_box: bool = True
    input_proposal: str = "rect"
    radius_init: float = 1.0
    radius_log_step: float = float(np.log10(2.0))
    seed: int = 0

    def resolve_n_init(self, dim: int) -> int:
        return 2 * dim if self.n_init is None else self.n_init

    def validate(self, dim: int) -> None:
        n_init = self.resolve_n_init(dim)
        if n_init < 2:
            raise ValueError(f"n_init must be >= 2, got {n_init}")
        if self.budget <= n_init:
            raise ValueError(
                f"budget ({self.budget}) must exceed n_init ({n_init})"
            )
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.surrogate not in ("gp", "nn"):
            raise ValueError(f"unknown surrogate {self.surrogate!r}")
        if self.af not in AF_KINDS:
            raise ValueError(f"unknown acquisition kind {self.af!r}")
        if self.af in ("ei", "ucb", "ts") and self.surrogate != "gp":
            raise ValueError(
                f"acquisition {self.af!r} needs the GP surrogate's uncertainty"
            )
        if self.input_proposal not in ("rect", "sphere"):
            raise ValueError(f"unknown input proposal {self.input_proposal!r}")


class ObjectiveEvaluationError(RuntimeError):
    """Wraps an exception raised by the objective during a run."""


@dataclass
class TraceRecord:
    """One objective call: where, what, and loop state at the time."""

    call_index: int
    theta: np.ndarray
    f_value: float
    best_so_far: float
    beta: float
    radius: float
    mode: str
    wall_ms: float


@dataclass
class OptimizationResult:
    log: EvaluationLog
    best_point: np.ndarray
    best_value: float
    trace: list[TraceRecord]
    completed: bool = True
    error: Optional[str] = None


class OptimizationRun:
    """Mutable state of one run; ``step()`` advances one outer iteration."""

    def __init__(self, objective: Objective, config: OptimizerConfig):
        config.validate(objective.dim)
        self.objective = objective
        self.config = config
        self.dim = objective.dim
        self.n_init = config.resolve_n_init(objective.dim)
        self.streams = rng_streams(config.seed)
        self.log = EvaluationLog(self.dim)
        self.trace: list[TraceRecord] = []
        self.trust = TrustState(
            radius=config.radius_init, log_step=config.radius_log_step
        )
        self.schedule = None
        self.iteration = 0
        self._t_last = time.perf_counter()

    def _evaluate(self, unit_points, beta: float, radius: float, mode: str):
        unit_points = np.atleast_2d(unit_points)
        values = []
        for u in unit_points:
            theta = self.objective.domain.from_unit(u)
            try:
                values.append(float(self.objective.evaluate(theta)))
            except Exception as exc:
                raise ObjectiveEvaluationError(
                    f"objective raised at call {len(self.log) + len(values)}: "
                    f"{type(exc).__name__}: {exc}"
                ) from exc
        running_best = self.log.best_value if len(self.log) else -np.inf
        self.log.append(unit_points, values)
        now = time.perf_counter()
        per_call_ms = (now - self._t_last) * 1e3 / unit_points.shape[0]
        self._t_last = now
        start = len(self.log) - unit_points.shape[0]
        for k, (u, v) in enumerate(zip(unit_points, values)):
            running_best = max(running_best, v)
            self.trace.append(
                TraceRecord(
                    call_index=start + k,
                    theta=self.objective.domain.from_unit(u),
                    f_value=v,
                    best_so_far=running_best,
                    beta=beta,
                    radius=radius,
                    mode=mode,
                    wall_ms=per_call_ms,
                )
            )

    def initialize(self):
        init = latin_hypercube(self.n_init, self.dim, self.streams["init"])
        self._evaluate(init, np.nan, np.nan, "init")
        self.schedule = build_schedule(
            self.log.raw_values,
            self.config.budget,
            self.n_init,
            self.config.batch_size,
            beta_max=self.config.beta_max,
            greedy_fraction=self.config.greedy_fraction,
            anneal=self.config.anneal,
        )

    def _fit_surrogate(self, targets):
        if self.config.surrogate == "gp":
            model = GaussianProcessSurrogate()
        else:
            model = MLPSurrogate(random_state=self.streams["nn"])
        return model.fit(self.log.points, targets)

    def _score(self, surrogate, flow, proposals, beta: float, mode: str):
        cfg = self.config
        if cfg.af in ("dlo", "dlo-greedy"):
            s = surrogate.predict(proposals)
            weight = cfg.density_weight
            if cfg.af == "dlo-greedy" or mode == "greedy":
                weight = 0.0
            if weight == 0.0:
                # greedy limit drops the density term entirely
                return dlo_af(s, np.zeros_like(s), 0.0)
            logq = flow.score_samples(proposals)
            return dlo_af(s, logq, weight)
        if cfg.af == "ei":
            mu, sigma = surrogate.predict(proposals, return_std=True)
            return expected_improvement(mu, sigma, beta * self.log.best_value)
        if cfg.af == "ucb":
            mu, sigma = surrogate.predict(proposals, return_std=True)
            return upper_confidence_bound(mu, sigma, cfg.ucb_beta)
        return thompson_sample(model=surrogate, proposals=proposals,
                               random_state=self.streams["ts"])

    def step(self):
        """One outer iteration: fit, propose, score, evaluate a batch."""
        if self.schedule is None:
            raise RuntimeError("run not initialized")
        cfg = self.config
        i = self.iteration
        beta = self.schedule.beta_at(i)
        mode = self.schedule.mode_at(i) if cfg.af == "dlo" else cfg.af

        flow = SlicedGaussianizationFlow(
            n_layers=cfg.flow_layers,
            max_directions=cfg.max_directions,
            bandwidth_factor=cfg.bandwidth_factor,
            random_state=self.streams["flow"],
        ).fit(self.log.points)
        surrogate = self._fit_surrogate(beta * self.log.raw_values)

        proposals = generate_proposals(
            self.log,
            flow,
            surrogate,
            self.trust,
            self.dim,
            self.streams["proposals"],
            local_box=cfg.local_box,
            input_shape=cfg.input_proposal,
        )
        af_values = self._score(surrogate, flow, proposals, beta, mode)

        prev_best = self.log.best_value
        batch = min(cfg.batch_size, cfg.budget - len(self.log))
        chosen = select_batch(af_values, proposals, batch)
        self._evaluate(chosen, beta, self.trust.radius, mode)
        improved = (self.log.best_value - prev_best) > self.trust.improvement_tol
        self.trust = update_radius(self.trust, improved)
        self.iteration += 1

    def finish(self) -> OptimizationResult:
        if len(self.log) == 0:
            return OptimizationResult(
                log=self.log,
                best_point=np.full(self.dim, np.nan),
                best_value=np.nan,
                trace=self.trace,
                completed=False,
            )
        return OptimizationResult(
            log=self.log,
            best_point=self.objective.domain.from_unit(self.log.best_point),
            best_value=self.log.best_value,
            trace=self.trace,
            completed=len(self.log) == self.config.budget,
        )


def run(objective: Objective, config: OptimizerConfig) -> OptimizationResult:
    """Run the optimizer to its full budget.

    An objective that raises aborts the run; the partial trace is
    returned with ``completed=False`` and the error message attached.
    """
    state = OptimizationRun(objective, config)
    try:
        state.initialize()
        while len(state.log) < config.budget:
            state.step()
    except ObjectiveEvaluationError as exc:
        result = state.finish()
        result.completed = False
        result.error = str(exc)
        return result
    return state.finish()


def random_search(objective: Objective, budget: int, seed: int = 0,
                  n_init: Optional[int] = None) -> OptimizationResult:
    """Uniform-search baseline sharing the Latin-hypercube initialization
    and the trace format of the optimizer."""
    dim = objective.dim
    n_init = 2 * dim if n_init is None else n_init
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n_init = min(n_init, budget)
    streams = rng_streams(seed)
    log = EvaluationLog(dim)
    trace: list[TraceRecord] = []

    def record(points, mode):
        for u in points:
            t0 = time.perf_counter()
            theta = objective.domain.from_unit(u)
            value = float(objective.evaluate(theta))
            log.append(u[None, :], [value])
            trace.append(
                TraceRecord(
                    call_index=len(log) - 1,
                    theta=theta,
                    f_value=value,
                    best_so_far=log.best_value,
                    beta=np.nan,
                    radius=np.nan,
                    mode=mode,
                    wall_ms=(time.perf_counter() - t0) * 1e3,
                )
            )

    record(latin_hypercube(n_init, dim, streams["init"]), "init")
    if budget > n_init:
        record(streams["init"].random((budget - n_init, dim)), "random")
    return OptimizationResult(
        log=log,
        best_point=objective.domain.from_unit(log.best_point),
        best_value=log.best_value,
        trace=trace,
        completed=True,
    )
