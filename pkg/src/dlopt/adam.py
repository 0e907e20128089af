"""Minimal Adam update rule shared by the surrogate fitting routines."""

from __future__ import annotations

import numpy as np


class Adam:
    """Bias-corrected Adam over a flat parameter vector (maximization or
    minimization is the caller's concern; pass the gradient of whatever is
    being descended)."""

    def __init__(self, n_params: int, step_size: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.step_size = step_size
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """One descent update; returns the new parameter vector."""
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.step_size * m_hat / (np.sqrt(v_hat) + self.eps)
