"""Travel-time distributions attached to network edges.

Three families are supported: Exponential, Gamma and Uniform(0, b).  Each
exposes the cdf, the mean, the characteristic function, a sampler and the
supremum of |characteristic function| over a high-frequency band, which is
what determines the per-hop attenuation of oscillating inputs.  Families
whose characteristic function does not decay at all (deterministic or
lattice-supported travel times) are deliberately not representable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

__all__ = [
    "Exponential",
    "Gamma",
    "Uniform",
    "DelayDistribution",
    "delay_to_json",
    "delay_from_json",
]

# grid resolution of the band-supremum search, points per unit frequency
_SUP_POINTS_PER_UNIT = 10_000


def _check_gap(gap: float) -> None:
    if not gap > 0:
        raise ValueError(f"frequency gap must be positive, got {gap}")


@dataclass(frozen=True)
class Exponential:
    """Exponential travel time with the given rate (mean 1/rate)."""

    rate: float

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError(f"exponential rate must be positive, got {self.rate}")

    @property
    def mean(self) -> float:
        return 1.0 / self.rate

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return -np.expm1(-self.rate * np.maximum(t, 0.0))

    def characteristic_function(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return self.rate / (self.rate - 1j * sigma)

    def grid_density(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        return np.where(t >= 0, self.rate * np.exp(-self.rate * np.maximum(t, 0.0)), 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.exponential(self.mean, size)

    def abs_cf_sup(self, gap: float) -> float:
        """sup of |characteristic_function| over |sigma| >= gap (attained at gap)."""
        _check_gap(gap)
        return float((1.0 + (gap / self.rate) ** 2) ** -0.5)


@dataclass(frozen=True)
class Gamma:
    """Gamma travel time with the given shape and rate (mean shape/rate)."""

    shape: float
    rate: float

    def __post_init__(self) -> None:
        if not self.shape > 0:
            raise ValueError(f"gamma shape must be positive, got {self.shape}")
        if not self.rate > 0:
            raise ValueError(f"gamma rate must be positive, got {self.rate}")

    @property
    def mean(self) -> float:
        return self.shape / self.rate

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return special.gammainc(self.shape, self.rate * np.maximum(t, 0.0))

    def characteristic_function(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        return np.power(1.0 - 1j * sigma / self.rate, -self.shape)

    def grid_density(self, times: np.ndarray) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        out = np.zeros_like(t)
        pos = t > 0
        tp = t[pos]
        out[pos] = np.exp(
            self.shape * np.log(self.rate)
            + (self.shape - 1.0) * np.log(tp)
            - self.rate * tp
            - special.gammaln(self.shape)
        )
        # value at t=0: finite for shape >= 1; for shape < 1 the density blows
        # up, so match the mass of the first cell instead.
        zero = t == 0
        if np.any(zero):
            if self.shape > 1.0:
                pass  # density vanishes at 0
            elif self.shape == 1.0:
                out[zero] = self.rate
            else:
                dt = float(times[1] - times[0]) if len(np.atleast_1d(times)) > 1 else 1.0
                matched = max(2.0 * float(self.cdf(dt)) / dt - float(self.grid_density(np.array([dt]))[0]), 0.0)
                out[zero] = matched
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def abs_cf_sup(self, gap: float) -> float:
        """sup of |characteristic_function| over |sigma| >= gap (attained at gap)."""
        _check_gap(gap)
        return float((1.0 + (gap / self.rate) ** 2) ** (-self.shape / 2.0))


@dataclass(frozen=True)
class Uniform:
    """Uniform travel time on (0, width)."""

    width: float

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError(f"uniform width must be positive, got {self.width}")

    @property
    def mean(self) -> float:
        return self.width / 2.0

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.clip(t / self.width, 0.0, 1.0)

    def characteristic_function(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        z = 1j * sigma * self.width
        small = np.abs(sigma) * self.width < 1e-8
        safe = np.where(small, 1.0, z)
        out = np.where(small, 1.0 + z / 2.0, (np.exp(safe) - 1.0) / safe)
        return out

    def grid_density(self, times: np.ndarray) -> np.ndarray:
        # Piecewise-constant density; a grid point sitting on the support
        # endpoint gets the midpoint value so the trapezoid mass stays exact.
        t = np.asarray(times, dtype=float)
        ts = np.atleast_1d(times)
        step = float(ts[1] - ts[0]) if len(ts) > 1 else self.width
        if step > self.width / 2.0:
            raise ValueError(
                f"grid step {step:g} too coarse for a uniform delay of width "
                f"{self.width:g}; most of the mass would fall between grid points"
            )
        tol = 1e-9 * max(step, 1.0)
        value = 1.0 / self.width
        out = np.where(t < self.width - tol, value, 0.0)
        out = np.where(np.abs(t - self.width) <= tol, value / 2.0, out)
        return np.where(t >= 0, out, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.uniform(0.0, self.width, size)

    def abs_cf_sup(self, gap: float) -> float:
        """sup of |characteristic_function| over |sigma| >= gap.

        |cf(sigma)| = |2 sin(sigma*width/2) / (sigma*width)| is not monotone,
        so the band is scanned on a dense grid and the scan stops once the
        decreasing envelope 2/(sigma*width) falls below the running maximum.
        """
        _check_gap(gap)
        lo = gap
        hi = gap + 4.0 * np.pi / self.width
        best = 0.0
        best_sigma = gap
        while True:
            count = max(int((hi - lo) * _SUP_POINTS_PER_UNIT), 2)
            sigma = np.linspace(lo, hi, count)
            values = np.abs(self.characteristic_function(sigma))
            peak = int(np.argmax(values))
            if values[peak] > best:
                best = float(values[peak])
                best_sigma = float(sigma[peak])
            if 2.0 / (hi * self.width) <= best:
                break
            lo, hi = hi, 2.0 * hi
        # refine around the grid argmax so the result is grid-independent
        step = 2.0 / _SUP_POINTS_PER_UNIT
        for _ in range(8):
            sigma = np.linspace(max(gap, best_sigma - step), best_sigma + step, 65)
            values = np.abs(self.characteristic_function(sigma))
            peak = int(np.argmax(values))
            best = max(best, float(values[peak]))
            best_sigma = float(sigma[peak])
            step /= 16.0
        return best


DelayDistribution = Union[Exponential, Gamma, Uniform]


def delay_to_json(delay: DelayDistribution) -> dict:
    if isinstance(delay, Exponential):
        return {"family": "exponential", "rate": delay.rate}
    if isinstance(delay, Gamma):
        return {"family": "gamma", "shape": delay.shape, "rate": delay.rate}
    if isinstance(delay, Uniform):
        return {"family": "uniform", "b": delay.width}
    raise TypeError(f"unknown delay distribution {delay!r}")


def delay_from_json(doc: dict) -> DelayDistribution:
    family = doc.get("family")
    if family == "exponential":
        return Exponential(rate=float(doc["rate"]))
    if family == "gamma":
        return Gamma(shape=float(doc["shape"]), rate=float(doc["rate"]))
    if family == "uniform":
        return Uniform(width=float(doc["b"]))
    raise ValueError(f"unsupported delay family {family!r}; "
                     "supported families are exponential, gamma and uniform")
