"""Experiment replication over seeds with CSV persistence.

Each replication writes one trace file; a summary aggregates the
per-call median and interquartile range of the best-so-far curves
across seeds. Files are written atomically (temp file + rename) and
reruns with identical configuration are byte-identical, so the CSVs
double as regression artifacts. The wall_ms column is persisted as 0 to
keep traces reproducible; measured timings stay on the in-memory
results.
"""

from __future__ import annotations

import csv
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .objectives import Objective, get_objective
from .optimizer import OptimizationResult, OptimizerConfig, random_search, run

TRACE_FIXED_COLUMNS = [
    "seed", "algo", "objective", "dim", "call_index", "f_value",
    "best_so_far", "beta", "R", "mode", "wall_ms",
]
SUMMARY_COLUMNS = [
    "call_index", "median_best", "q25_best", "q75_best", "n_runs", "status",
]


@dataclass
class ExperimentConfig:
    """One experiment: an objective, an algorithm, and a seed list."""

    objective: str
    out_dir: str
    algo: str = "dlo"
    dim: Optional[int] = None
    seeds: list[int] = field(default_factory=lambda: [0])
    jobs: int = 1
    optimizer: OptimizerConfig = field(
        default_factory=lambda: OptimizerConfig(budget=0)
    )

    def resolve_objective(self) -> Objective:
        return get_objective(self.objective, dim=self.dim)

    def validate(self) -> None:
        if not self.seeds:
            raise ValueError("need at least one seed")
        if self.algo not in ("dlo", "random"):
            raise ValueError(f"unknown algorithm {self.algo!r}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        obj = self.resolve_objective()
        if self.algo == "dlo":
            self.optimizer.validate(obj.dim)


def _atomic_write(path: Path, write_fn) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write_fn(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    # repr gives the shortest roundtrip form, stable across reruns
    return repr(float(x))


def write_trace(path: Path, result: OptimizationResult, seed: int, algo: str,
                objective_name: str, dim: int) -> None:
    header = TRACE_FIXED_COLUMNS + [f"theta_{k}" for k in range(dim)]

    def body(fh):
        writer = csv.writer(fh)
        writer.writerow(header)
        for rec in result.trace:
            writer.writerow(
                [
                    seed, algo, objective_name, dim, rec.call_index,
                    _fmt(rec.f_value), _fmt(rec.best_so_far), _fmt(rec.beta),
                    _fmt(rec.radius), rec.mode, _fmt(0.0),
                ]
                + [_fmt(t) for t in rec.theta]
            )

    _atomic_write(path, body)


def read_trace_best(path: Path) -> np.ndarray:
    """best_so_far column of a trace file."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return np.array([float(row["best_so_far"]) for row in reader])


def write_summary(path: Path, curves: list[np.ndarray], statuses: list[str],
                  budget: int) -> None:
    ok = [c for c, s in zip(curves, statuses) if s == "ok"]
    failed = sorted(s for s in statuses if s != "ok")
    status = "ok" if not failed else ";".join(failed)

    def body(fh):
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for k in range(budget):
            at_k = [c[k] for c in ok if k < c.size]
            if at_k:
                med = _fmt(np.median(at_k))
                q25 = _fmt(np.quantile(at_k, 0.25))
                q75 = _fmt(np.quantile(at_k, 0.75))
            else:
                med = q25 = q75 = _fmt(np.nan)
            writer.writerow([k, med, q25, q75, len(at_k), status])

    _atomic_write(path, body)


def _run_one(args) -> tuple[int, OptimizationResult]:
    objective_id, dim, algo, opt_config, seed = args
    objective = get_objective(objective_id, dim=dim)
    try:
        if algo == "random":
            return seed, random_search(objective, opt_config.budget, seed=seed)
        return seed, run(objective, replace(opt_config, seed=seed))
    except Exception as exc:  # per-run failures must not sink the experiment
        from .history import EvaluationLog

        result = OptimizationResult(
            log=EvaluationLog(objective.dim),
            best_point=np.full(objective.dim, np.nan),
            best_value=np.nan,
            trace=[],
            completed=False,
            error=f"{type(exc).__name__}: {exc}",
        )
        return seed, result


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every replication and persist traces plus the summary.

    Returns a dict with the trace paths, the summary path, per-seed
    statuses, and the in-memory results. Raises before any run starts if
    the output directory is not writable; a failing run is recorded in
    the summary status column while the remaining seeds continue.
    """
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probe = out / ".write_probe"
    try:
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc

    objective = config.resolve_objective()
    tasks = [
        (config.objective, config.dim, config.algo, config.optimizer, seed)
        for seed in config.seeds
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            outcomes = list(pool.map(_run_one, tasks))
    else:
        outcomes = [_run_one(t) for t in tasks]

    trace_paths, curves, statuses, results = [], [], [], {}
    for seed, result in outcomes:
        path = out / f"trace_{seed}.csv"
        write_trace(path, result, seed, config.algo, objective.name, objective.dim)
        trace_paths.append(path)
        curves.append(np.array([rec.best_so_far for rec in result.trace]))
        statuses.append("ok" if result.completed else f"seed{seed}_failed")
        results[seed] = result

    budget = config.optimizer.budget
    summary_path = out / "summary.csv"
    write_summary(summary_path, curves, statuses, budget)
    return {
        "traces": trace_paths,
        "summary": summary_path,
        "statuses": statuses,
        "results": results,
        "all_ok": all(s == "ok" for s in statuses),
    }
