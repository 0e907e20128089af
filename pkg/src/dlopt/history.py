"""Append-only log of evaluated points, the shared state of a run."""

from __future__ import annotations

import numpy as np


class EvaluationLog:
    """All evaluated points in unit-cube coordinates plus raw objective values.

    Raw values are stored once and never rewritten; annealed targets are
    computed as views (``beta * raw_values``) by the surrogate fitting
    code. Single source of truth for surrogate and flow fitting.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        self.dim = dim
        self._points: list[np.ndarray] = []
        self._values: list[float] = []

    def __len__(self) -> int:
        return len(self._values)

    def append(self, points, values) -> None:
        """Append a batch of unit-cube points with their raw objective values."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.atleast_1d(np.asarray(values, dtype=float))
        if points.shape != (values.size, self.dim):
            raise ValueError(
                f"shape mismatch: {points.shape} points vs {values.size} values "
                f"in dimension {self.dim}"
            )
        if (points < 0).any() or (points > 1).any():
            raise ValueError("logged points must lie in the unit cube")
        for p, v in zip(points, values):
            self._points.append(p.copy())
            self._values.append(float(v))

    @property
    def points(self) -> np.ndarray:
        """(n, d) array of evaluated unit-cube points."""
        if not self._points:
            return np.empty((0, self.dim))
        return np.vstack(self._points)

    @property
    def raw_values(self) -> np.ndarray:
        return np.asarray(self._values)

    @property
    def call_indices(self) -> np.ndarray:
        return np.arange(len(self._values))

    @property
    def best_index(self) -> int:
        """Index of the maximum raw value (first occurrence on ties)."""
        if not self._values:
            raise ValueError("log is empty")
        return int(np.argmax(self._values))

    @property
    def best_value(self) -> float:
        return self._values[self.best_index]

    @property
    def best_point(self) -> np.ndarray:
        """Unit-cube coordinates of the best evaluated point."""
        return self._points[self.best_index].copy()
