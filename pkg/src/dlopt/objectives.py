"""Benchmark objectives, all exposed in maximization sense.

The synthetic minimization functions (Ackley, Rastrigin) are wrapped
through a log transform so their argmin becomes the argmax; the three
posterior-style objectives are log-densities used directly as
maximization targets.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

from .domain import BoxDomain

EPS_LOG = 1e-12


def ackley_raw(theta) -> float:
    """Standard Ackley function, global minimum 0 at the origin.

    Grouped as 20(1 - exp(.)) + (e - exp(.)) so the value at the origin
    cancels to exactly 0 in floating point.
    """
    theta = np.asarray(theta, dtype=float)
    rms = np.sqrt(np.mean(theta**2))
    cos_mean = np.mean(np.cos(2 * np.pi * theta))
    return float(20.0 * (1.0 - np.exp(-0.2 * rms)) + (np.e - np.exp(cos_mean)))


def rastrigin_raw(theta) -> float:
    """Shifted Rastrigin: 10*d + sum(theta_i^2 - 10 cos(2 pi theta_i)).

    Global minimum 0 at the origin; equals the common form with additive
    constant 100 when d = 10.
    """
    theta = np.asarray(theta, dtype=float)
    return float(
        10.0 * theta.size + np.sum(theta**2 - 10.0 * np.cos(2 * np.pi * theta))
    )


def min_to_max(
    g: Callable[[np.ndarray], float], g_star: float, eps_log: float = EPS_LOG
) -> Callable[[np.ndarray], float]:
    """Turn a minimization objective into a maximization one.

    Returns ``theta -> -log(g(theta) - g_star + eps_log)``, strictly
    decreasing in g, so the argmax of the result is the argmin of g. The
    eps_log floor keeps the value finite at the optimum itself.
    """

    def g_max(theta):
        return float(-np.log(g(theta) - g_star + eps_log))

    return g_max


# ---------------------------------------------------------------------------
# posterior-style objectives (log densities, d = 10)
# ---------------------------------------------------------------------------

_CORR_DIM = 10
_CORR_MEAN = 0.2
_CORR_LAMBDA_MAX = 0.09
_CORR_CONDITION = 200.0


def _corrgauss_params():
    """Covariance eigendecomposition for the correlated Gaussian target.

    Eigenvalues fall geometrically from 0.09 to 0.09/200; eigenvectors come
    from QR-orthogonalizing a standard-normal matrix drawn with seed 42,
    with column signs fixed so the factorization is unique.
    """
    d = _CORR_DIM
    lams = _CORR_LAMBDA_MAX * _CORR_CONDITION ** (-np.arange(d) / (d - 1))
    rng = np.random.default_rng(42)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    mean = np.full(d, _CORR_MEAN)
    cov_inv = q @ np.diag(1.0 / lams) @ q.T
    log_norm = -0.5 * (d * np.log(2 * np.pi) + np.sum(np.log(lams)))
    return mean, cov_inv, log_norm


_CORR_CACHE = None


def correlated_gaussian_logpdf(theta) -> float:
    """Log density of a 10-d Gaussian with condition number 200."""
    global _CORR_CACHE
    if _CORR_CACHE is None:
        _CORR_CACHE = _corrgauss_params()
    mean, cov_inv, log_norm = _CORR_CACHE
    diff = np.asarray(theta, dtype=float) - mean
    return float(log_norm - 0.5 * diff @ cov_inv @ diff)


_DG_WEIGHTS = np.array([0.3, 0.7])
_DG_MEANS = np.array([0.625, -0.325])
_DG_SIGMA = 0.1


def double_gaussian_logpdf(theta) -> float:
    """Log density of a widely separated two-component Gaussian mixture.

    Components are isotropic with per-coordinate means 0.625 and -0.325
    and standard deviation 0.1; the -0.325 peak carries 70% of the mass
    and is the global maximum.
    """
    theta = np.asarray(theta, dtype=float)
    d = theta.size
    log_comps = np.empty(2)
    for k in range(2):
        sq = np.sum((theta - _DG_MEANS[k]) ** 2)
        log_comps[k] = (
            np.log(_DG_WEIGHTS[k])
            - 0.5 * d * np.log(2 * np.pi * _DG_SIGMA**2)
            - 0.5 * sq / _DG_SIGMA**2
        )
    return float(logsumexp(log_comps))


def rosenbrock_logpost(theta) -> float:
    """Negated Rosenbrock valley, maximum 0 at the all-ones point."""
    theta = np.asarray(theta, dtype=float)
    head, tail = theta[:-1], theta[1:]
    return float(-np.sum((1.0 - head) ** 2 + 100.0 * (tail - head**2) ** 2))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Objective:
    """A maximization target over a box domain.

    ``evaluate`` takes a point in domain coordinates and must be a pure,
    deterministic function. ``known_optimum``, when present, is the
    (argmax, max value) pair.
    """

    name: str
    dim: int
    domain: BoxDomain
    evaluate: Callable[[np.ndarray], float]
    known_optimum: Optional[tuple[np.ndarray, float]] = None


def _make_ackley(dim: int) -> Objective:
    fn = min_to_max(ackley_raw, 0.0)
    return Objective(
        name=f"ackley{dim}",
        dim=dim,
        domain=BoxDomain.cube(-5.0, 10.0, dim),
        evaluate=fn,
        known_optimum=(np.zeros(dim), -np.log(EPS_LOG)),
    )


def _make_rastrigin(dim: int) -> Objective:
    fn = min_to_max(rastrigin_raw, 0.0)
    return Objective(
        name=f"rastrigin{dim}",
        dim=dim,
        domain=BoxDomain.cube(-5.12, 5.12, dim),
        evaluate=fn,
        known_optimum=(np.zeros(dim), -np.log(EPS_LOG)),
    )


def _make_corrgauss() -> Objective:
    mu = np.full(_CORR_DIM, _CORR_MEAN)
    return Objective(
        name="corrgauss10",
        dim=_CORR_DIM,
        domain=BoxDomain.cube(-2.0, 2.0, _CORR_DIM),
        evaluate=correlated_gaussian_logpdf,
        known_optimum=(mu, correlated_gaussian_logpdf(mu)),
    )


def _make_doublegauss() -> Objective:
    mu = np.full(10, _DG_MEANS[1])
    return Objective(
        name="doublegauss10",
        dim=10,
        domain=BoxDomain.cube(-2.0, 2.0, 10),
        evaluate=double_gaussian_logpdf,
        known_optimum=(mu, double_gaussian_logpdf(mu)),
    )


def _make_rosenbrock() -> Objective:
    return Objective(
        name="rosenbrock10",
        dim=10,
        domain=BoxDomain.cube(-5.0, 5.0, 10),
        evaluate=rosenbrock_logpost,
        known_optimum=(np.ones(10), 0.0),
    )


_PARAMETRIC = {"ackley": _make_ackley, "rastrigin": _make_rastrigin}
_FIXED = {
    "corrgauss10": _make_corrgauss,
    "doublegauss10": _make_doublegauss,
    "rosenbrock10": _make_rosenbrock,
}


def objective_ids() -> list[str]:
    """Ids accepted by :func:`get_objective`."""
    return sorted(
        [f"{k}10" for k in _PARAMETRIC]
        + [f"{k}-d" for k in _PARAMETRIC]
        + list(_FIXED)
    )


def get_objective(name: str, dim: Optional[int] = None) -> Objective:
    """Look up an objective by id.

    Fixed ids: ``ackley10``, ``rastrigin10``, ``corrgauss10``,
    ``doublegauss10``, ``rosenbrock10``. Dimension-parameterized forms:
    ``ackley-<d>`` / ``rastrigin-<d>``, or the bare family name
    (``ackley``, ``rastrigin``) combined with ``dim``.
    """
    if name in _FIXED:
        obj = _FIXED[name]()
        if dim is not None and dim != obj.dim:
            raise ValueError(f"objective {name!r} is fixed at dimension {obj.dim}")
        return obj
    m = re.fullmatch(r"([a-z]+)(?:-?(\d+)|-d)?", name)
    if m and m.group(1) in _PARAMETRIC:
        family = m.group(1)
        named_dim = int(m.group(2)) if m.group(2) else None
        if named_dim is not None and dim is not None and named_dim != dim:
            raise ValueError(
                f"dimension {dim} conflicts with objective id {name!r}"
            )
        final_dim = named_dim if named_dim is not None else dim
        if final_dim is None:
            raise ValueError(f"objective {name!r} needs an explicit dimension")
        if final_dim < 1:
            raise ValueError("dimension must be >= 1")
        return _PARAMETRIC[family](final_dim)
    raise ValueError(
        f"unknown objective {name!r}; available: {', '.join(objective_ids())}"
    )
