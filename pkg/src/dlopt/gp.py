"""Exact Gaussian-process regression with a Matern-5/2 kernel.

The surrogate is fitted by marginal-likelihood ascent: 50 Adam steps on
(log lengthscale, log signal variance, bounded noise), keeping the best
iterate. The noise variance is constrained to [1e-6, 1e-4] through a
sigmoid so interpolation stays tight; targets are used raw (no
standardization), with the annealing level doing the conditioning work
upstream.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .adam import Adam
from .sampling import as_generator

NOISE_LOW = 1e-6
NOISE_HIGH = 1e-4
_SQRT5 = np.sqrt(5.0)


class GPFitError(RuntimeError):
    """Raised when the kernel matrix cannot be factorized even with jitter.

    Carries the offending hyperparameters in ``hyper``.
    """

    def __init__(self, message, hyper=None):
        super().__init__(message)
        self.hyper = hyper


def matern52(r, lengthscale: float, signal_variance: float):
    """Matern-5/2 covariance as a function of Euclidean distance r >= 0."""
    u = _SQRT5 * np.asarray(r, dtype=float) / lengthscale
    return signal_variance * (1.0 + u + u**2 / 3.0) * np.exp(-u)


def _pairwise_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    return np.sqrt(np.maximum(sq, 0.0))


def _sigmoid(w):
    return 0.5 * (1.0 + np.tanh(0.5 * w))


def _noise_from_raw(w: float) -> float:
    return NOISE_LOW + (NOISE_HIGH - NOISE_LOW) * _sigmoid(w)


def _inv_from_chol(L: np.ndarray) -> np.ndarray:
    """Full inverse of L L^T from its Cholesky factor (LAPACK dpotri)."""
    inv, info = sla.lapack.dpotri(L, lower=1)
    if info != 0:
        inv = sla.cho_solve((L, True), np.eye(L.shape[0]))
        return inv
    return inv + np.tril(inv, -1).T


def _chol_with_jitter(mat: np.ndarray, hyper=None):
    """Lower Cholesky factor, escalating diagonal jitter up to 1e-4."""
    jitter = 0.0
    while True:
        try:
            return sla.cholesky(mat + jitter * np.eye(mat.shape[0]), lower=True)
        except sla.LinAlgError:
            jitter = 1e-10 if jitter == 0.0 else jitter * 10.0
            if jitter > 1e-4:
                raise GPFitError(
                    f"Cholesky failed even with jitter 1e-4 (hyper={hyper})",
                    hyper=hyper,
                ) from None


def log_marginal_likelihood(X, y, lengthscale, signal_variance, noise_variance):
    """Exact log marginal likelihood of the data under the kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    hyper = (lengthscale, signal_variance, noise_variance)
    K = matern52(_pairwise_dist(X, X), lengthscale, signal_variance)
    K[np.diag_indices_from(K)] += noise_variance
    L = _chol_with_jitter(K, hyper)
    alpha = sla.cho_solve((L, True), y)
    return float(
        -0.5 * y @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * y.size * np.log(2 * np.pi)
    )


def _lml_and_grad(dist, y, params):
    """LML and its gradient wrt (log lengthscale, log signal var, raw noise).

    Gradient uses the trace identity d(LML)/dp = 0.5 tr((aa^T - K^-1) dK/dp).
    """
    log_ell, log_sf2, w = params
    ell, sf2 = np.exp(log_ell), np.exp(log_sf2)
    noise = _noise_from_raw(w)
    u = _SQRT5 * dist / ell
    expu = np.exp(-u)
    Kf = sf2 * (1.0 + u + u**2 / 3.0) * expu
    K = Kf + noise * np.eye(dist.shape[0])
    L = _chol_with_jitter(K, (ell, sf2, noise))
    alpha = sla.cho_solve((L, True), y)
    lml = (
        -0.5 * y @ alpha
        - np.sum(np.log(np.diag(L)))
        - 0.5 * y.size * np.log(2 * np.pi)
    )
    W = np.outer(alpha, alpha) - _inv_from_chol(L)
    dK_dlogell = sf2 * expu * u**2 * (1.0 + u) / 3.0
    s = _sigmoid(w)
    dnoise_dw = (NOISE_HIGH - NOISE_LOW) * s * (1.0 - s)
    grad = np.array(
        [
            0.5 * np.sum(W * dK_dlogell),
            0.5 * np.sum(W * Kf),
            0.5 * np.trace(W) * dnoise_dw,
        ]
    )
    return float(lml), grad


class GaussianProcessSurrogate(RegressorMixin, BaseEstimator):
    """Zero-mean exact GP with an isotropic Matern-5/2 kernel.

    Parameters
    ----------
    n_adam_steps : int
        Number of Adam updates on the hyperparameters; 0 keeps the
        initialization (lengthscale 0.5*sqrt(d), signal variance var(y),
        noise at its lower bound).
    step_size : float
        Adam step size.

    After ``fit`` the chosen hyperparameters are the best iterate by log
    marginal likelihood, exposed as ``lengthscale_``, ``signal_variance_``
    and ``noise_variance_``.
    """

    def __init__(self, n_adam_steps: int = 50, step_size: float = 0.1):
        self.n_adam_steps = n_adam_steps
        self.step_size = step_size

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if X.shape[0] != y.size:
            raise ValueError("X and y lengths differ")
        if X.shape[0] < 2:
            raise ValueError("need at least two training points")
        if not np.isfinite(y).all():
            raise GPFitError("non-finite training targets")
        if not np.isfinite(X).all():
            raise GPFitError("non-finite training inputs")

        dist = _pairwise_dist(X, X)
        # signal variance starts at var(y); numerically constant targets
        # fall back to the mean square so the prior covers the data scale
        # (50 Adam steps cannot climb the seven decades from 1e-6)
        sf2_init = float(np.var(y))
        msq = float(np.mean(y**2))
        if sf2_init < 1e-12 * max(msq, 1.0):
            sf2_init = msq
        sf2_init = max(sf2_init, 1e-6)
        # raw noise -10 puts the initial noise a fraction of a percent
        # above the 1e-6 lower bound, the closest the sigmoid allows
        params = np.array(
            [np.log(0.5 * np.sqrt(X.shape[1])), np.log(sf2_init), -10.0]
        )
        # best iterate over the initialization plus every Adam update
        best_lml = -np.inf
        best_params = params.copy()
        opt = Adam(3, self.step_size)
        for _ in range(self.n_adam_steps):
            lml, grad = _lml_and_grad(dist, y, params)
            if lml > best_lml:
                best_lml, best_params = lml, params.copy()
            params = opt.step(params, -grad)
        lml, _ = _lml_and_grad(dist, y, params)
        if lml > best_lml:
            best_lml, best_params = lml, params.copy()

        self.X_train_ = X
        self.y_train_ = y
        self._train_sq_ = np.sum(X**2, axis=1)
        self.lengthscale_ = float(np.exp(best_params[0]))
        self.signal_variance_ = float(np.exp(best_params[1]))
        self.noise_variance_ = float(_noise_from_raw(best_params[2]))
        self.log_marginal_likelihood_ = best_lml
        K = matern52(dist, self.lengthscale_, self.signal_variance_)
        K[np.diag_indices_from(K)] += self.noise_variance_
        self.L_ = _chol_with_jitter(
            K, (self.lengthscale_, self.signal_variance_, self.noise_variance_)
        )
        self.alpha_ = sla.cho_solve((self.L_, True), y)
        return self

    def _kernel_cross(self, Q):
        sq = (
            np.sum(Q**2, axis=1)[:, None]
            + self._train_sq_[None, :]
            - 2.0 * Q @ self.X_train_.T
        )
        return matern52(
            np.sqrt(np.maximum(sq, 0.0)),
            self.lengthscale_,
            self.signal_variance_,
        )

    def predict(self, Q, return_std: bool = False):
        """Posterior mean at query points, optionally with pointwise std."""
        check_is_fitted(self, "alpha_")
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        Kqx = self._kernel_cross(Q)
        mean = Kqx @ self.alpha_
        if not return_std:
            return mean
        v = sla.solve_triangular(self.L_, Kqx.T, lower=True)
        var = self.signal_variance_ - np.sum(v**2, axis=0)
        return mean, np.sqrt(np.clip(var, 0.0, None))

    def predict_cov(self, Q) -> np.ndarray:
        """Full posterior covariance; negative diagonal noise is clipped to 0."""
        check_is_fitted(self, "alpha_")
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        Kqq = matern52(
            _pairwise_dist(Q, Q), self.lengthscale_, self.signal_variance_
        )
        Kqx = self._kernel_cross(Q)
        v = sla.solve_triangular(self.L_, Kqx.T, lower=True)
        cov = Kqq - v.T @ v
        d = np.diag(cov).copy()
        np.fill_diagonal(cov, np.where(d < 0, 0.0, d))
        return cov

    def sample_y(self, Q, random_state=None, n_samples: int = 1) -> np.ndarray:
        """Joint posterior draws at Q; shape (m,) for one draw else (n_samples, m)."""
        rng = as_generator(random_state)
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        mean = self.predict(Q)
        cov = self.predict_cov(Q)
        cov[np.diag_indices_from(cov)] += 1e-10
        try:
            L = _chol_with_jitter(cov)
        except GPFitError as exc:
            raise GPFitError(f"posterior covariance not factorizable: {exc}") from exc
        z = rng.standard_normal((Q.shape[0], n_samples))
        draws = mean[None, :] + (L @ z).T
        return draws[0] if n_samples == 1 else draws
