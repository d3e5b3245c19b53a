"""Uniform time grids and trapezoid quadrature helpers.

Every grid-based engine in the package works on a shared uniform grid
``0, dt, 2*dt, ..., horizon`` so that arrays from different operations can
be convolved and compared cell by cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["TimeGrid", "conv_trapezoid", "trapezoid_mass", "cumulative_trapezoid"]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, horizon] with step dt (horizon rounded to a cell)."""

    dt: float
    horizon: float

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"grid step must be positive, got {self.dt}")
        if not self.horizon > 0:
            raise ValueError(f"grid horizon must be positive, got {self.horizon}")

    @property
    def n(self) -> int:
        """Number of grid points, including t=0."""
        return int(round(self.horizon / self.dt)) + 1

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.dt


def conv_trapezoid(f: np.ndarray, g: np.ndarray, dt: float) -> np.ndarray:
    """Causal convolution (f * g)(t_m) = int_0^{t_m} f(u) g(t_m - u) du.

    Both arrays live on the same uniform grid starting at 0; the integral is
    evaluated with trapezoid weights, so the result at t_0 is exactly 0.
    """
    n = min(len(f), len(g))
    full = np.convolve(f[:n], g[:n])[:n]
    return dt * (full - 0.5 * f[0] * g[:n] - 0.5 * g[0] * f[:n])


def trapezoid_mass(f: np.ndarray, dt: float) -> float:
    """Trapezoid integral of the whole array."""
    return float(np.trapezoid(f, dx=dt))


def cumulative_trapezoid(f: np.ndarray, dt: float) -> np.ndarray:
    """Running trapezoid integral int_0^{t_m} f, zero at the first point."""
    return dt * (np.cumsum(f) - 0.5 * (f + f[0]))
