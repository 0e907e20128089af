"""Acquisition functions ranking proposal points.

The default scores a proposal by surrogate value minus a weighted
log-density of already-evaluated points, trading exploitation against
exploration of unvisited regions. The classic uncertainty-based rules
(expected improvement, upper confidence bound, Thompson sampling) are
provided as baselines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

AF_KINDS = ("dlo", "dlo-greedy", "ei", "ucb", "ts")


@dataclass(frozen=True)
class AcquisitionConfig:
    """Which acquisition rule to use and its coefficients.

    density_weight is the multiplier on the log-density penalty of the
    default rule; ucb_beta weights the predictive standard deviation in
    the UCB rule.
    """

    kind: str = "dlo"
    density_weight: float = 0.01
    ucb_beta: float = 1.0

    def __post_init__(self):
        if self.kind not in AF_KINDS:
            raise ValueError(f"unknown acquisition kind {self.kind!r}")
        if self.density_weight < 0:
            raise ValueError("density_weight must be >= 0")
        if self.ucb_beta < 0:
            raise ValueError("ucb_beta must be >= 0")


def dlo_af(surrogate_values, log_density, density_weight: float) -> np.ndarray:
    """Surrogate value minus density_weight times log-density."""
    s = np.asarray(surrogate_values, dtype=float)
    q = np.asarray(log_density, dtype=float)
    if s.shape != q.shape:
        raise ValueError("surrogate and log-density lengths differ")
    finite = np.isfinite(s) & np.isfinite(q)
    if not finite.all():
        i = int(np.nonzero(~finite)[0][0])
        raise ValueError(f"non-finite acquisition input at proposal {i}")
    return s - density_weight * q


def expected_improvement(mu, sigma, f_star: float) -> np.ndarray:
    """EI over the incumbent f_star; the sigma -> 0 limit is max(mu - f_star, 0)."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if (sigma < 0).any():
        raise ValueError("sigma must be nonnegative")
    improve = mu - f_star
    out = np.where(improve > 0, improve, 0.0)
    pos = sigma > 0
    if pos.any():
        z = improve[pos] / sigma[pos]
        phi = np.exp(-0.5 * z**2) / np.sqrt(2 * np.pi)
        out = out.copy()
        out[pos] = improve[pos] * ndtr(z) + sigma[pos] * phi
    return np.clip(out, 0.0, None)


def upper_confidence_bound(mu, sigma, ucb_beta: float) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if (sigma < 0).any():
        raise ValueError("sigma must be nonnegative")
    return mu + ucb_beta * sigma


def thompson_sample(model, proposals, random_state=None) -> np.ndarray:
    """One joint posterior draw over the proposals, used directly as scores."""
    proposals = np.atleast_2d(np.asarray(proposals, dtype=float))
    if proposals.shape[0] > 2000:
        raise ValueError(
            f"Thompson sampling limited to 2000 proposals, got {proposals.shape[0]}"
        )
    return model.sample_y(proposals, random_state=random_state)


def top_batch_indices(af_values, batch_size: int) -> np.ndarray:
    """Indices of the batch_size highest scores, ties to the lowest index."""
    af = np.asarray(af_values, dtype=float)
    if batch_size > af.size:
        raise ValueError(f"batch size {batch_size} exceeds {af.size} proposals")
    if batch_size < 1:
        raise ValueError("batch size must be >= 1")
    order = np.argsort(-af, kind="stable")
    return order[:batch_size]


def select_batch(af_values, proposals, batch_size: int) -> np.ndarray:
    """The batch_size proposals with highest scores, in score order."""
    proposals = np.atleast_2d(np.asarray(proposals, dtype=float))
    af = np.asarray(af_values, dtype=float)
    if af.size != proposals.shape[0]:
        raise ValueError("scores and proposals lengths differ")
    return proposals[top_batch_indices(af, batch_size)]
