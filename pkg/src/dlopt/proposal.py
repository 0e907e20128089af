"""Candidate generation: trust-region radius and local proposal volumes.

Half of each iteration's candidates come from a gradient-scaled box (or
Gaussian sphere) around the best evaluated point in input space; the
other half are drawn from a Gaussian ball of the same radius around that
point's image in the flow's latent space and mapped back.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

GRAD_AXIS_FLOOR = 0.05
N_SAMPLE_PER_DIM = 100


@dataclass(frozen=True)
class TrustState:
    """Trust-region radius with two-strikes shrink accounting.

    The radius grows by 10**log_step on improvement and shrinks by the
    same factor after two consecutive non-improving iterations, clamped
    to [radius_min, radius_max]. Improvement means the best value rose by
    more than improvement_tol.
    """

    radius: float = 1.0
    log_step: float = float(np.log10(2.0))
    fail_count: int = 0
    radius_min: float = 1e-3
    radius_max: float = 1.0
    improvement_tol: float = 5e-6


def update_radius(state: TrustState, improved: bool) -> TrustState:
    """Advance the trust-region state by one iteration outcome."""
    if improved:
        return replace(
            state,
            radius=min(state.radius * 10**state.log_step, state.radius_max),
            fail_count=0,
        )
    fails = state.fail_count + 1
    if fails >= 2:
        return replace(
            state,
            radius=max(state.radius * 10**-state.log_step, state.radius_min),
            fail_count=0,
        )
    return replace(state, fail_count=fails)


def propose_input_space(center, radius: float, grad_unit, n: int,
                        rng: np.random.Generator,
                        shape: str = "rect") -> np.ndarray:
    """Candidates around ``center`` in the unit cube.

    With a gradient unit vector, axis half-widths are radius *
    max(|g_i|, 0.05), elongating the volume along the steep direction;
    without one all half-widths equal the radius. ``shape`` picks a
    uniform hyperrectangle or a Gaussian with the half-widths as
    per-axis standard deviations. Output is clamped to [0, 1]^d.
    """
    center = np.asarray(center, dtype=float)
    if n < 1:
        raise ValueError("need n >= 1 proposals")
    if grad_unit is not None:
        grad_unit = np.asarray(grad_unit, dtype=float)
        half = radius * np.maximum(np.abs(grad_unit), GRAD_AXIS_FLOOR)
    else:
        half = np.full(center.size, radius)
    if shape == "rect":
        pts = center + half * rng.uniform(-1.0, 1.0, size=(n, center.size))
    elif shape == "sphere":
        pts = center + half * rng.standard_normal((n, center.size))
    else:
        raise ValueError(f"unknown proposal shape {shape!r}")
    return np.clip(pts, 0.0, 1.0)


def surrogate_gradient_unit(surrogate, center, step: float = 1e-4):
    """Central finite-difference gradient of the surrogate mean, normalized.

    Returns None for a (numerically) flat surrogate.
    """
    center = np.asarray(center, dtype=float)
    d = center.size
    shifts = np.vstack([np.eye(d) * step, -np.eye(d) * step])
    vals = surrogate.predict(center[None, :] + shifts)
    grad = (vals[:d] - vals[d:]) / (2 * step)
    norm = np.linalg.norm(grad)
    if not np.isfinite(norm) or norm == 0.0:
        return None
    return grad / norm


def generate_proposals(log, flow, surrogate, state: TrustState, dim: int,
                       rng: np.random.Generator, local_box: bool = True,
                       input_shape: str = "rect") -> np.ndarray:
    """The iteration's 100*d candidate points.

    ceil(half) from the input-space volume around the best evaluated
    point, floor(half) from the flow's latent ball at the same center
    and radius. Latent draws that fail inversion are replaced by extra
    input-space draws. With ``local_box=False`` the input-space half is
    uniform over the whole cube instead.
    """
    if len(log) < 1:
        raise ValueError("need at least one evaluated point")
    n_total = N_SAMPLE_PER_DIM * dim
    n_box = (n_total + 1) // 2
    n_latent = n_total // 2
    center = log.best_point

    latent = flow.sample_around(
        center, state.radius, n_latent, random_state=rng, on_failure="drop"
    )
    n_fallback = n_latent - latent.shape[0]

    if local_box:
        grad = surrogate_gradient_unit(surrogate, center)
        box = propose_input_space(
            center, state.radius, grad, n_box + n_fallback, rng, shape=input_shape
        )
    else:
        box = rng.random((n_box + n_fallback, dim))
    return np.vstack([box, latent])
