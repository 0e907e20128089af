"""Normalizing flow for the density of evaluated points.

The flow is an initial whitening step followed by a stack of sliced
Gaussianization layers. Each layer picks a few orthonormal directions
whose one-dimensional projections look least Gaussian (largest
Wasserstein-2 distance to the standard normal) and pushes them through a
monotone kernel-CDF map t -> Phi^{-1}(F_hat(t)). The composition gives an
exact log-density by the change-of-variables formula, an invertible map
for latent-space sampling, and trains in closed form from a few dozen
points.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from scipy.special import ndtr, ndtri
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .sampling import as_generator

CDF_CLIP = 1e-7
INVERT_TOL = 1e-10
MAX_BRACKET_DOUBLINGS = 60
_LOG_SQRT_2PI = 0.5 * np.log(2 * np.pi)


def _phi(z):
    return np.exp(-0.5 * z**2) / np.sqrt(2 * np.pi)


class FlowInversionError(RuntimeError):
    """Raised when the bracketed 1D inversion cannot enclose a solution."""


def scott_bandwidth(projections, bw: float = 1.0) -> float:
    """Scott's-rule kernel bandwidth bw * std * n^(-1/5).

    The sample standard deviation (ddof=1) is floored at 1e-6 so
    degenerate projections still produce a positive bandwidth.
    """
    projections = np.asarray(projections, dtype=float)
    n = projections.size
    if n < 2:
        raise ValueError("need at least two projections")
    sigma = max(float(np.std(projections, ddof=1)), 1e-6)
    return bw * sigma * n ** (-0.2)


class Transform1D:
    """Monotone Gaussianization of one projection axis.

    Maps t -> z = Phi^{-1}(F_hat(t)) where F_hat is the Gaussian-KDE CDF
    of the fitted projections. Outside the CDF_CLIP quantiles the map
    continues as a straight line with the boundary slope, so it stays
    strictly increasing and invertible for arbitrarily far tail queries
    while the log-density of such points keeps falling.
    """

    def __init__(self, projections, bw: float = 1.0):
        data = np.sort(np.asarray(projections, dtype=float))
        if data.size < 2:
            raise ValueError("need at least two projections")
        self.data = data
        self.h = scott_bandwidth(data, bw)
        self.lo = float(data[0])
        self.hi = float(data[-1])
        # CDF at the knots, reused to warm-start inversions
        self._cdf_knots = ndtr(
            (data[:, None] - data[None, :]) / self.h
        ).mean(axis=1)
        self.z_clip = float(ndtri(1.0 - CDF_CLIP))
        # inside [lo - margin, hi + margin] the CDF provably stays within
        # the clip quantiles, so the exact clip boundaries are only solved
        # for (lazily) when a query actually falls outside this band
        margin = self.h * float(ndtri(1.0 - min(data.size * CDF_CLIP, 0.5)))
        self._safe_lo = self.lo - margin
        self._safe_hi = self.hi + margin
        self._edges = None

    def _ensure_edges(self):
        """Clip boundary points and the C1 tail slopes, solved on demand."""
        if self._edges is None:
            n = self.data.size
            d = CDF_CLIP
            # analytic bracket: the nearest kernel bounds the mixture CDF
            # between ndtr(.)/n and ndtr(.)
            lo_lo = self.lo + self.h * ndtri(d)
            lo_hi = self.lo + self.h * ndtri(min(n * d, 0.5))
            hi_lo = self.hi + self.h * ndtri(max(1.0 - n * d, 0.5))
            hi_hi = self.hi + self.h * ndtri(1.0 - d)
            t_edges = self._solve_cdf(
                np.array([d, 1.0 - d]),
                lo=np.array([lo_lo, hi_lo]),
                hi=np.array([lo_hi, hi_hi]),
            )
            slopes = self._raw_pdf(t_edges) / _phi(self.z_clip)
            self._edges = (
                float(t_edges[0]),
                float(t_edges[1]),
                max(float(slopes[0]), 1e-100),
                max(float(slopes[1]), 1e-100),
            )
        return self._edges

    @property
    def t_clip_lo(self):
        return self._ensure_edges()[0]

    @property
    def t_clip_hi(self):
        return self._ensure_edges()[1]

    @property
    def slope_lo(self):
        return self._ensure_edges()[2]

    @property
    def slope_hi(self):
        return self._ensure_edges()[3]

    def cdf(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = (t[:, None] - self.data[None, :]) / self.h
        return np.add.reduce(ndtr(u), axis=1) / self.data.size

    def _raw_pdf(self, t):
        u = (t[:, None] - self.data[None, :]) / self.h
        pdf_sum = np.add.reduce(np.exp(-0.5 * u**2), axis=1)
        return pdf_sum / (self.data.size * self.h * np.sqrt(2 * np.pi))

    def _cdf_pdf(self, t):
        u = (t[:, None] - self.data[None, :]) / self.h
        n = self.data.size
        cdf = np.add.reduce(ndtr(u), axis=1) / n
        pdf = np.add.reduce(np.exp(-0.5 * u**2), axis=1) / (
            n * self.h * np.sqrt(2 * np.pi)
        )
        return cdf, pdf

    def transform(self, t, with_logjac: bool = True):
        """Gaussianize; returns (z, log_jacobian), or just z when the
        Jacobian is not needed."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = (t[:, None] - self.data[None, :]) / self.h
        cdf = np.add.reduce(ndtr(u), axis=1) / self.data.size
        z = ndtri(np.clip(cdf, CDF_CLIP, 1.0 - CDF_CLIP))
        if with_logjac:
            neg_half_u2 = -0.5 * u**2
            kernel_sum = np.add.reduce(np.exp(neg_half_u2), axis=1)
            with np.errstate(divide="ignore"):
                log_sum = np.log(kernel_sum)
            under = kernel_sum == 0.0
            if under.any():
                # shift-and-rescan only for rows whose kernels underflow
                a = neg_half_u2[under]
                amax = a.max(axis=1)
                log_sum[under] = amax + np.log(
                    np.add.reduce(np.exp(a - amax[:, None]), axis=1)
                )
            log_pdf = (
                log_sum
                - np.log(self.data.size)
                - np.log(self.h)
                - _LOG_SQRT_2PI
            )
            log_jac = log_pdf + 0.5 * z**2 + _LOG_SQRT_2PI
        if (t > self._safe_hi).any():
            t_hi, slope = self.t_clip_hi, self.slope_hi
            high = t > t_hi
            if high.any():
                z[high] = self.z_clip + (t[high] - t_hi) * slope
                if with_logjac:
                    log_jac[high] = np.log(slope)
        if (t < self._safe_lo).any():
            t_lo, slope = self.t_clip_lo, self.slope_lo
            low = t < t_lo
            if low.any():
                z[low] = -self.z_clip + (t[low] - t_lo) * slope
                if with_logjac:
                    log_jac[low] = np.log(slope)
        return (z, log_jac) if with_logjac else z

    def _solve_cdf(self, p, lo=None, hi=None):
        """Solve F_hat(t) = p for p inside the clip quantiles.

        A bracket is grown by doubling outward from the data range (unless
        explicit bracket arrays are supplied); inside it a Newton iteration
        (analytic CDF derivative) safeguarded by bisection runs to an
        absolute tolerance of 1e-10. Targets that cannot be bracketed after
        60 doublings raise :class:`FlowInversionError`.
        """
        m = p.size
        if lo is None:
            lo = np.full(m, self.lo)
            hi = np.full(m, self.hi)

            # targets inside the knot range are bracketed by adjacent knots;
            # tail targets get the nearest-kernel bound
            # ndtr(u)/n <= F_hat <= ndtr(u) around the closest data point
            inside = (p >= self._cdf_knots[0]) & (p <= self._cdf_knots[-1])
            if inside.any():
                j = np.clip(
                    np.searchsorted(self._cdf_knots, p[inside]),
                    1,
                    self.data.size - 1,
                )
                lo[inside] = self.data[j - 1]
                hi[inside] = self.data[j]
            low_tail = p < self._cdf_knots[0]
            if low_tail.any():
                lo[low_tail] = self.lo + self.h * ndtri(p[low_tail])
            high_tail = p > self._cdf_knots[-1]
            if high_tail.any():
                hi[high_tail] = self.hi + self.h * ndtri(p[high_tail])

            # safety net: expand by doubling wherever the analytic bracket
            # does not enclose the target
            tails = np.nonzero(low_tail | high_tail)[0]
            if tails.size:
                width = max(self.hi - self.lo, self.h, 1e-6)
                for side in ("lo", "hi"):
                    if side == "lo":
                        need = tails[self.cdf(lo[tails]) > p[tails]]
                    else:
                        need = tails[self.cdf(hi[tails]) < p[tails]]
                    step = width
                    for _ in range(MAX_BRACKET_DOUBLINGS):
                        if need.size == 0:
                            break
                        if side == "lo":
                            lo[need] -= step
                            need = need[self.cdf(lo[need]) > p[need]]
                        else:
                            hi[need] += step
                            need = need[self.cdf(hi[need]) < p[need]]
                        step *= 2.0
                    if need.size:
                        raise FlowInversionError(
                            f"{need.size} of {m} targets not bracketed after "
                            f"{MAX_BRACKET_DOUBLINGS} doublings"
                        )
        else:
            lo = lo.astype(float).copy()
            hi = hi.astype(float).copy()

        # warm start by interpolating the knot CDF, then safeguarded Newton;
        # the residual lives in z-space where the map is near-linear, so
        # the iteration does not stall on density plateaus
        z_target = ndtri(p)
        t = np.clip(np.interp(p, self._cdf_knots, self.data), lo, hi)
        idx = np.arange(m)
        tiny = np.finfo(float).tiny
        one_minus = 1.0 - np.finfo(float).epsneg
        for _ in range(200):
            if idx.size == 0:
                break
            ta = t[idx]
            cdf, pdf = self._cdf_pdf(ta)
            zeta = ndtri(np.clip(cdf, tiny, one_minus))
            g = zeta - z_target[idx]
            root_left = g > 0
            la = np.where(root_left, lo[idx], ta)
            ha = np.where(root_left, ta, hi[idx])
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                t_new = ta - g * _phi(zeta) / pdf
            # strict bounds: a step landing exactly on a bracket edge is a
            # converged root, not a rejection
            outside = ~np.isfinite(t_new) | (t_new < la) | (t_new > ha)
            t_new = np.where(outside, 0.5 * (la + ha), t_new)
            moved = np.abs(t_new - ta)
            t[idx], lo[idx], hi[idx] = t_new, la, ha
            idx = idx[(moved > INVERT_TOL) & ((ha - la) > INVERT_TOL)]
        return t

    def inverse(self, z, return_ok: bool = False):
        """Solve z = transform(t) for t; the linear tails invert in closed
        form, interior targets go through the bracketed root finder."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        t = np.empty_like(z)
        ok = np.ones(z.size, dtype=bool)
        high = z > self.z_clip
        low = z < -self.z_clip
        interior = ~(high | low)
        if high.any():
            t[high] = self.t_clip_hi + (z[high] - self.z_clip) / self.slope_hi
        if low.any():
            t[low] = self.t_clip_lo + (z[low] + self.z_clip) / self.slope_lo
        if interior.any():
            try:
                t[interior] = self._solve_cdf(ndtr(z[interior]))
            except FlowInversionError:
                if not return_ok:
                    raise
                ok[interior] = False
        if return_ok:
            return t, ok
        return t


class SlicedLayer:
    """One Gaussianization layer: K orthonormal directions, each with a
    monotone 1D transform; the orthogonal complement passes through."""

    def __init__(self, directions: np.ndarray, transforms: list[Transform1D]):
        self.directions = directions
        self.transforms = transforms

    @classmethod
    def fit(cls, points, n_directions, bw, rng):
        W = find_directions(points, n_directions, rng)
        proj = points @ W.T
        transforms = [Transform1D(proj[:, k], bw) for k in range(W.shape[0])]
        return cls(W, transforms)

    def forward(self, Z, with_logdet: bool = True):
        proj = Z @ self.directions.T
        new = np.empty_like(proj)
        logdet = np.zeros(Z.shape[0]) if with_logdet else None
        for k, tr in enumerate(self.transforms):
            if with_logdet:
                new[:, k], lj = tr.transform(proj[:, k])
                logdet += lj
            else:
                new[:, k] = tr.transform(proj[:, k], with_logjac=False)
        return Z + (new - proj) @ self.directions, logdet

    def inverse(self, Z, return_ok: bool = False):
        proj = Z @ self.directions.T
        old = np.empty_like(proj)
        ok = np.ones(Z.shape[0], dtype=bool)
        for k, tr in enumerate(self.transforms):
            old[:, k], ok_k = tr.inverse(proj[:, k], return_ok=True)
            ok &= ok_k
        out = Z - (proj - old) @ self.directions
        if not return_ok:
            if not ok.all():
                raise FlowInversionError(
                    f"{int((~ok).sum())} of {Z.shape[0]} points failed inversion"
                )
            return out
        return out, ok


def find_directions(points, n_directions, rng, n_candidates: int = 64):
    """Greedy orthonormal directions of maximal 1D non-Gaussianity.

    Candidates are 64 random unit vectors plus the coordinate axes; the
    score of a direction is the Wasserstein-2 distance between the sorted
    projections and matching standard-normal quantiles. Each pick is
    re-orthonormalized against earlier picks.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if n < 2:
        raise ValueError("need at least two points to pick directions")
    if not 1 <= n_directions <= d:
        raise ValueError(f"need 1 <= n_directions <= {d}")
    rng = as_generator(rng)
    cands = rng.standard_normal((n_candidates, d))
    cands /= np.linalg.norm(cands, axis=1, keepdims=True)
    cands = np.vstack([cands, np.eye(d)])
    quantiles = ndtri((np.arange(1, n + 1) - 0.5) / n)

    picks = []
    for _ in range(n_directions):
        resid = cands.copy()
        for w in picks:
            resid -= np.outer(resid @ w, w)
        norms = np.linalg.norm(resid, axis=1)
        usable = norms > 1e-8
        resid[usable] /= norms[usable, None]
        proj = np.sort(points @ resid[usable].T, axis=0)
        scores = np.mean((proj - quantiles[:, None]) ** 2, axis=0)
        picks.append(resid[usable][int(np.argmax(scores))])

    W = np.array(picks)
    # final modified Gram-Schmidt pass to pin orthonormality at 1e-10
    for i in range(W.shape[0]):
        for j in range(i):
            W[i] -= (W[i] @ W[j]) * W[j]
        W[i] /= np.linalg.norm(W[i])
    return W


class _Whitening:
    """Mean subtraction and ridged-covariance decorrelation."""

    def __init__(self, points):
        self.mean = points.mean(axis=0)
        cov = np.atleast_2d(np.cov(points, rowvar=False, ddof=1))
        d = points.shape[1]
        ridge = 1e-6 * np.trace(cov) / d
        if ridge <= 0.0:
            ridge = 1e-12
        self.L = np.linalg.cholesky(cov + ridge * np.eye(d))
        self.logdet_forward = -float(np.sum(np.log(np.diag(self.L))))

    def forward(self, X):
        return sla.solve_triangular(self.L, (X - self.mean).T, lower=True).T

    def inverse(self, Z):
        return self.mean + Z @ self.L.T


class SlicedGaussianizationFlow(TransformerMixin, BaseEstimator):
    """Whitening plus ``n_layers`` sliced Gaussianization layers.

    Parameters
    ----------
    n_layers : int
        Number of sliced layers after the whitening step (default 5).
    max_directions : int
        Directions per layer, capped at the data dimension (default 8).
    bandwidth_factor : float
        Multiplier on the Scott's-rule kernel bandwidth (default 1.0).
    random_state : int, Generator or None
        Source for the direction candidates.

    ``transform`` maps data to the standard-normal latent space,
    ``inverse_transform`` maps back, and ``score_samples`` returns the
    exact log-density of the fitted point distribution.
    """

    def __init__(self, n_layers: int = 5, max_directions: int = 8,
                 bandwidth_factor: float = 1.0, random_state=None):
        self.n_layers = n_layers
        self.max_directions = max_directions
        self.bandwidth_factor = bandwidth_factor
        self.random_state = random_state

    def fit(self, X, y=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] < 2:
            raise ValueError("need at least two points to fit the flow")
        rng = as_generator(self.random_state)
        self.n_features_in_ = X.shape[1]
        self.whitening_ = _Whitening(X)
        Z = self.whitening_.forward(X)
        self.layers_ = []
        k = min(self.max_directions, X.shape[1])
        for _ in range(self.n_layers):
            layer = SlicedLayer.fit(Z, k, self.bandwidth_factor, rng)
            Z, _ = layer.forward(Z, with_logdet=False)
            self.layers_.append(layer)
        return self

    def forward_with_logdet(self, X):
        """Latent image and total forward log-Jacobian of each point."""
        check_is_fitted(self, "layers_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = self.whitening_.forward(X)
        logdet = np.full(X.shape[0], self.whitening_.logdet_forward)
        for layer in self.layers_:
            Z, ld = layer.forward(Z)
            logdet += ld
        return Z, logdet

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "layers_")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Z = self.whitening_.forward(X)
        for layer in self.layers_:
            Z, _ = layer.forward(Z, with_logdet=False)
        return Z

    def inverse_transform(self, Z, return_ok: bool = False):
        check_is_fitted(self, "layers_")
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        ok = np.ones(Z.shape[0], dtype=bool)
        for layer in reversed(self.layers_):
            Z, ok_l = layer.inverse(Z, return_ok=True)
            ok &= ok_l
        X = self.whitening_.inverse(Z)
        if not return_ok:
            if not ok.all():
                raise FlowInversionError(
                    f"{int((~ok).sum())} of {Z.shape[0]} points failed inversion"
                )
            return X
        return X, ok

    def score_samples(self, X) -> np.ndarray:
        """Exact log-density of the fitted distribution at X."""
        Z, logdet = self.forward_with_logdet(X)
        log_base = -0.5 * np.sum(Z**2, axis=1) - Z.shape[1] * _LOG_SQRT_2PI
        return log_base + logdet

    def sample_around(self, center, radius: float, n: int, random_state=None,
                      on_failure: str = "error") -> np.ndarray:
        """Map a Gaussian ball around the latent image of ``center`` back to
        data space, clamped to the unit cube.

        Draws failing inversion are resampled up to 10 times; leftovers
        raise :class:`FlowInversionError` (``on_failure='error'``) or are
        dropped (``on_failure='drop'``), in which case fewer than n points
        may return.
        """
        rng = as_generator(random_state)
        center = np.asarray(center, dtype=float)
        z_center = self.transform(center[None, :])[0]
        collected = []
        need = n
        for _ in range(11):
            if need == 0:
                break
            draws = z_center + radius * rng.standard_normal(
                (need, center.size)
            )
            X, ok = self.inverse_transform(draws, return_ok=True)
            if ok.any():
                collected.append(X[ok])
                need -= int(ok.sum())
        if need > 0 and on_failure == "error":
            raise FlowInversionError(
                f"{need} of {n} latent draws failed inversion after 10 retries"
            )
        if collected:
            out = np.vstack(collected)
        else:
            out = np.empty((0, center.size))
        return np.clip(out, 0.0, 1.0)
