"""Fully connected regression network, a drop-in surrogate mean.

Two tanh hidden layers of width 100, trained full-batch with Adam on
mean squared error. No uncertainty output; pairs with the density-based
acquisition only.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .adam import Adam
from .sampling import as_generator


class MLPTrainingError(RuntimeError):
    """Raised when the training loss turns non-finite; carries the epoch."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


def init_params(dim: int, widths, rng: np.random.Generator):
    """Xavier-uniform weights and zero biases for layers dim -> widths -> 1."""
    sizes = [dim, *widths, 1]
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def forward(params, X: np.ndarray) -> np.ndarray:
    """Network output, tanh hidden activations and identity output."""
    h = X
    n_layers = len(params) // 2
    for layer in range(n_layers):
        h = h @ params[2 * layer] + params[2 * layer + 1]
        if layer < n_layers - 1:
            h = np.tanh(h)
    return h[:, 0]


def loss_and_grads(params, X: np.ndarray, y: np.ndarray):
    """MSE loss and its gradient for every weight and bias.

    Plain reverse-mode sweep; kept analytic so it can be validated
    against finite differences. tanh'(a) is taken as 1 - h^2 from the
    stored activations rather than re-evaluating tanh.
    """
    n_layers = len(params) // 2
    acts = [X]
    h = X
    for layer in range(n_layers):
        a = h @ params[2 * layer] + params[2 * layer + 1]
        h = np.tanh(a) if layer < n_layers - 1 else a
        acts.append(h)
    out = acts[-1][:, 0]
    resid = out - y
    loss = float(np.mean(resid**2))

    grads = [None] * len(params)
    delta = (2.0 * resid / y.size)[:, None]
    for layer in reversed(range(n_layers)):
        grads[2 * layer] = acts[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ params[2 * layer].T) * (1.0 - acts[layer] ** 2)
    return loss, grads


def _flatten(arrays):
    return np.concatenate([a.ravel() for a in arrays])


def _unflatten(vec, template):
    out, k = [], 0
    for a in template:
        out.append(vec[k : k + a.size].reshape(a.shape))
        k += a.size
    return out


class MLPSurrogate(RegressorMixin, BaseEstimator):
    """Tanh network d -> 100 -> 100 -> 1 trained from scratch on each fit.

    Parameters
    ----------
    epochs : int
        Full-batch Adam updates (default 500).
    step_size : float
        Adam step size (default 1e-3).
    random_state : int, Generator or None
        Source for the Xavier-uniform initialization.
    """

    def __init__(self, epochs: int = 500, step_size: float = 1e-3,
                 hidden_width: int = 100, random_state=None):
        self.epochs = epochs
        self.step_size = step_size
        self.hidden_width = hidden_width
        self.random_state = random_state

    def fit(self, X, y):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float)
        if X.shape[0] != y.size:
            raise ValueError("X and y lengths differ")
        if X.shape[0] < 2:
            raise ValueError("need at least two training points")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise MLPTrainingError("non-finite training data", epoch=0)

        rng = as_generator(self.random_state)
        params = init_params(X.shape[1], (self.hidden_width,) * 2, rng)
        # parameters live as views into one flat buffer so the Adam update
        # applies in place without per-epoch repacking
        vec = _flatten(params)
        params = _unflatten(vec, params)
        opt = Adam(vec.size, self.step_size)
        initial_loss, _ = loss_and_grads(params, X, y)
        for epoch in range(self.epochs):
            loss, grads = loss_and_grads(params, X, y)
            if not np.isfinite(loss):
                raise MLPTrainingError(
                    f"training loss became non-finite at epoch {epoch}",
                    epoch=epoch,
                )
            vec[:] = opt.step(vec, _flatten(grads))
        final_loss, _ = loss_and_grads(params, X, y)
        if not np.isfinite(final_loss):
            raise MLPTrainingError(
                f"training loss became non-finite at epoch {self.epochs}",
                epoch=self.epochs,
            )

        self.params_ = params
        self.initial_loss_ = initial_loss
        self.final_loss_ = float(final_loss)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, Q) -> np.ndarray:
        check_is_fitted(self, "params_")
        Q = np.atleast_2d(np.asarray(Q, dtype=float))
        return forward(self.params_, Q)
