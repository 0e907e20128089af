"""Annealing schedule: initial level selection, log ladder, mode split.

The inverse-temperature multiplier beta scales the surrogate targets.
It starts low enough that the initial samples' value spread times beta
stays below 15 (keeping the surrogate interpolation well conditioned)
and rises geometrically to beta_max. When even beta_max satisfies the
spread bound there is nothing to anneal and beta stays at beta_max.
Iterations alternate between the annealed density-penalized rule and a
greedy surrogate-only rule at a configurable fraction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPREAD_BOUND = 15.0


def select_beta0(initial_values, beta_max: float) -> tuple[float, bool]:
    """Initial annealing level from the spread of the initial values.

    Returns (beta0, anneal_active). If beta_max * spread already sits
    below the bound, annealing is skipped entirely and beta0 = beta_max.
    """
    values = np.asarray(initial_values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least two initial values")
    if not np.isfinite(values).all():
        raise ValueError("initial values must be finite")
    spread = float(values.max() - values.min())
    if beta_max * spread < SPREAD_BOUND:
        return beta_max, False
    return min(beta_max, SPREAD_BOUND / spread), True


def beta_ladder(beta0: float, beta_max: float, n_steps: int) -> np.ndarray:
    """Geometric ladder from beta0 to beta_max with exact endpoints."""
    if not 0 < beta0 <= beta_max:
        raise ValueError("need 0 < beta0 <= beta_max")
    if n_steps < 1:
        raise ValueError("need at least one step")
    if n_steps == 1:
        return np.array([beta_max])
    ladder = beta0 * (beta_max / beta0) ** (np.arange(n_steps) / (n_steps - 1))
    ladder[0], ladder[-1] = beta0, beta_max
    return ladder


def mode_for_iteration(iteration: int, greedy_fraction: float) -> str:
    """Deterministic 'annealed'/'greedy' split at the requested fraction.

    Bresenham-style accumulator: greedy exactly when the running count
    floor((i+1)*f) increments, so over any N iterations the greedy count
    is within one of f*N. Fraction 0.5 alternates starting annealed.
    """
    if iteration < 0:
        raise ValueError("iteration must be >= 0")
    if not 0.0 <= greedy_fraction <= 1.0:
        raise ValueError("greedy fraction must be in [0, 1]")
    before = int(np.floor(iteration * greedy_fraction))
    after = int(np.floor((iteration + 1) * greedy_fraction))
    return "greedy" if after > before else "annealed"


@dataclass(frozen=True)
class AnnealSchedule:
    """Frozen per-run schedule; ``beta_at(i)`` clamps past the ladder end."""

    beta0: float
    beta_max: float
    betas: np.ndarray
    greedy_fraction: float
    anneal_active: bool

    def beta_at(self, iteration: int) -> float:
        return float(self.betas[min(iteration, self.betas.size - 1)])

    def mode_at(self, iteration: int) -> str:
        return mode_for_iteration(iteration, self.greedy_fraction)


def build_schedule(initial_values, budget: int, n_init: int, batch_size: int,
                   beta_max: float = 100.0, greedy_fraction: float = 0.5,
                   anneal: bool = True) -> AnnealSchedule:
    """Assemble the schedule for one run.

    The ladder length is (budget - n_init) // batch_size, at least 1.
    With ``anneal=False`` the annealing machinery is switched off and
    beta is pinned at 1 for the whole run.
    """
    n_steps = max((budget - n_init) // batch_size, 1)
    if not anneal:
        return AnnealSchedule(
            beta0=1.0,
            beta_max=1.0,
            betas=np.ones(n_steps),
            greedy_fraction=greedy_fraction,
            anneal_active=False,
        )
    beta0, active = select_beta0(initial_values, beta_max)
    if active:
        betas = beta_ladder(beta0, beta_max, n_steps)
    else:
        betas = np.full(n_steps, beta_max)
    return AnnealSchedule(
        beta0=beta0,
        beta_max=beta_max,
        betas=betas,
        greedy_fraction=greedy_fraction,
        anneal_active=active,
    )
