"""Rectangular search domains and unit-cube rescaling.

All optimizer internals work on the unit cube [0, 1]^d; a ``BoxDomain``
maps between user coordinates and unit-cube coordinates at the objective
boundary.
"""

from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """Raised when a point violates the bounds of a :class:`BoxDomain`."""


class BoxDomain:
    """Axis-aligned box ``[lower_i, upper_i]`` in d dimensions.

    Parameters
    ----------
    lower, upper : array-like of shape (d,)
        Componentwise bounds. Requires ``lower[i] < upper[i]`` for all i.
    """

    def __init__(self, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.ndim != 1 or upper.ndim != 1:
            raise DomainError("bounds must be one-dimensional vectors")
        if lower.shape != upper.shape:
            raise DomainError(
                f"bound shapes differ: {lower.shape} vs {upper.shape}"
            )
        if lower.size < 1:
            raise DomainError("domain needs at least one dimension")
        if not (np.isfinite(lower).all() and np.isfinite(upper).all()):
            raise DomainError("bounds must be finite")
        bad = np.nonzero(~(lower < upper))[0]
        if bad.size:
            i = int(bad[0])
            raise DomainError(
                f"lower[{i}]={lower[i]} must be strictly below upper[{i}]={upper[i]}"
            )
        self.lower = lower
        self.upper = upper
        self.width = upper - lower

    @property
    def dim(self) -> int:
        return self.lower.size

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "BoxDomain":
        """Box with identical bounds ``[lo, hi]`` in every coordinate."""
        return cls(np.full(dim, lo), np.full(dim, hi))

    def to_unit(self, theta) -> np.ndarray:
        """Affinely map points from domain coordinates to [0, 1]^d.

        Accepts a single point of shape (d,) or a batch of shape (n, d).
        Raises :class:`DomainError` naming the first offending coordinate
        when a point lies outside the box.
        """
        theta = np.asarray(theta, dtype=float)
        single = theta.ndim == 1
        pts = np.atleast_2d(theta)
        if pts.shape[1] != self.dim:
            raise DomainError(f"expected dimension {self.dim}, got {pts.shape[1]}")
        below = pts < self.lower
        above = pts > self.upper
        if below.any() or above.any():
            row, col = np.argwhere(below | above)[0]
            raise DomainError(
                f"coordinate {col} of point {row} ({pts[row, col]}) is outside "
                f"[{self.lower[col]}, {self.upper[col]}]"
            )
        u = (pts - self.lower) / self.width
        return u[0] if single else u

    def from_unit(self, u) -> np.ndarray:
        """Inverse of :meth:`to_unit`; exact affine map back to the box.

        Components may stray from [0, 1] by at most 1e-12 (they are
        snapped to the bound); anything farther raises :class:`DomainError`.
        """
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        pts = np.atleast_2d(u)
        if pts.shape[1] != self.dim:
            raise DomainError(f"expected dimension {self.dim}, got {pts.shape[1]}")
        if (pts < -1e-12).any() or (pts > 1 + 1e-12).any():
            row, col = np.argwhere((pts < -1e-12) | (pts > 1 + 1e-12))[0]
            raise DomainError(
                f"unit coordinate {col} of point {row} ({pts[row, col]}) "
                "is outside [0, 1]"
            )
        pts = np.clip(pts, 0.0, 1.0)
        theta = self.lower + pts * self.width
        return theta[0] if single else theta

    def __repr__(self):
        return f"BoxDomain(lower={self.lower!r}, upper={self.upper!r})"
