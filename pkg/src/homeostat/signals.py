"""Input-rate processes.

Two kinds of input are supported:

* :class:`AlmostPeriodicSignal` - a deterministic rate given by a finite
  trigonometric sum ``c0 + sum_k 2 Re(c_k exp(i sigma_k t))``.  Only the
  positive-frequency terms are stored; the conjugate terms are implied, so
  evaluation is real by construction.
* :class:`StationaryEnvironment` - a stationary random rate built from a
  finite mixture of harmonics with independent uniform random phases.  Any
  realization is itself an almost-periodic signal, which is what makes the
  conditional-mean analysis exact realization by realization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "HarmonicTerm",
    "AlmostPeriodicSignal",
    "StationaryEnvironment",
    "fourier_coefficient",
    "signal_to_json",
    "signal_from_json",
]

_CONJ_TOL = 1e-12


@dataclass(frozen=True)
class HarmonicTerm:
    """One term c * exp(i*frequency*t) of a trigonometric sum.

    Signals normalize their term lists to positive frequencies with the
    conjugate implied; negative frequencies are accepted on input only.
    """

    frequency: float
    coefficient: complex

    def __post_init__(self) -> None:
        if self.frequency == 0:
            raise ValueError("oscillatory terms must have nonzero frequency; "
                             "put the constant part in the mean")


def _normalize_terms(terms: Sequence[tuple[float, complex]]) -> tuple[HarmonicTerm, ...]:
    """Fold a signed term list into canonical positive-frequency form.

    A lone positive-frequency entry implies its conjugate; if both signs are
    given they must actually be conjugate.
    """
    by_freq: dict[float, complex] = {}
    neg: dict[float, complex] = {}
    for freq, coeff in terms:
        if freq == 0:
            raise ValueError("oscillatory terms must have nonzero frequency; "
                             "put the constant part in the mean")
        if freq > 0:
            if freq in by_freq:
                raise ValueError(f"duplicate frequency {freq}")
            by_freq[freq] = complex(coeff)
        else:
            if -freq in neg:
                raise ValueError(f"duplicate frequency {freq}")
            neg[-freq] = complex(coeff)
    for freq, coeff in neg.items():
        if freq not in by_freq:
            raise ValueError(f"negative-frequency term at {-freq} has no positive partner")
        if abs(np.conj(by_freq[freq]) - coeff) > _CONJ_TOL * max(1.0, abs(coeff)):
            raise ValueError(f"terms at +/-{freq} are not complex conjugates")
    return tuple(HarmonicTerm(f, by_freq[f]) for f in sorted(by_freq))


@dataclass(frozen=True)
class AlmostPeriodicSignal:
    """Finite trigonometric sum, real and non-negative by construction.

    Non-negativity is enforced through the sufficient condition
    ``2 * sum_k |c_k| <= mean``, which also bounds the signal by
    :attr:`envelope` from above.
    """

    mean: float
    terms: tuple[HarmonicTerm, ...] = ()

    def __post_init__(self) -> None:
        if self.mean < 0:
            raise ValueError(f"signal mean must be non-negative, got {self.mean}")
        normalized = _normalize_terms(
            [(t.frequency, t.coefficient) if isinstance(t, HarmonicTerm) else tuple(t)
             for t in self.terms]
        )
        object.__setattr__(self, "terms", normalized)
        if self.coefficient_sum > self.mean + 1e-12:
            raise ValueError(
                "sum of oscillatory coefficient magnitudes "
                f"({self.coefficient_sum:g}) exceeds the mean ({self.mean:g}); "
                "the signal could go negative"
            )

    @property
    def coefficient_sum(self) -> float:
        """Sum of |c_k| over the full signed term list (k != 0)."""
        return 2.0 * sum(abs(t.coefficient) for t in self.terms)

    @property
    def envelope(self) -> float:
        """Deterministic upper bound on the rate."""
        return self.mean + self.coefficient_sum

    @property
    def frequencies(self) -> tuple[float, ...]:
        return tuple(t.frequency for t in self.terms)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, self.mean)
        for term in self.terms:
            out = out + 2.0 * np.real(term.coefficient * np.exp(1j * term.frequency * t))
        return out

    def scaled(self, factor: float) -> "AlmostPeriodicSignal":
        """Same shape with every coefficient (and the mean) multiplied."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        return AlmostPeriodicSignal(
            mean=self.mean * factor,
            terms=tuple(HarmonicTerm(t.frequency, t.coefficient * factor) for t in self.terms),
        )


@dataclass(frozen=True)
class StationaryEnvironment:
    """Stationary random rate: mean + sum_k amp_k cos(sigma_k t + phase_k).

    Phases are i.i.d. uniform on [0, 2*pi).  ``sum_k amp_k <= mean`` keeps
    every realization non-negative and bounded by :attr:`envelope`.
    """

    mean: float
    harmonics: tuple[tuple[float, float], ...] = ()
    phase_seed: int = 0

    def __post_init__(self) -> None:
        if self.mean < 0:
            raise ValueError(f"environment mean must be non-negative, got {self.mean}")
        harmonics = tuple((float(f), float(a)) for f, a in self.harmonics)
        for freq, amp in harmonics:
            if not freq > 0:
                raise ValueError(f"harmonic frequency must be positive, got {freq}")
            if not amp > 0:
                raise ValueError(f"harmonic amplitude must be positive, got {amp}")
        if len({f for f, _ in harmonics}) != len(harmonics):
            raise ValueError("duplicate harmonic frequencies")
        object.__setattr__(self, "harmonics", harmonics)
        total = sum(a for _, a in harmonics)
        if total > self.mean + 1e-12:
            raise ValueError(
                f"sum of amplitudes ({total:g}) exceeds the mean ({self.mean:g}); "
                "realizations could go negative"
            )

    @property
    def envelope(self) -> float:
        return self.mean + sum(a for _, a in self.harmonics)

    @property
    def variance(self) -> float:
        """Stationary variance of the rate, sum_k amp_k^2 / 2."""
        return sum(a * a / 2.0 for _, a in self.harmonics)

    def spectral_measure(self) -> list[tuple[float, float]]:
        """Atoms (sigma, mass): mass amp^2/4 at +/- each harmonic frequency."""
        atoms = []
        for freq, amp in self.harmonics:
            atoms.append((-freq, amp * amp / 4.0))
            atoms.append((freq, amp * amp / 4.0))
        return sorted(atoms)

    def realize(self, seed=None) -> AlmostPeriodicSignal:
        """Draw phases and return the resulting deterministic signal.

        ``seed`` may be an int, a SeedSequence or a Generator; it defaults to
        :attr:`phase_seed`.  The positive-frequency coefficient of harmonic k
        is (amp_k/2) * exp(i*phase_k).
        """
        if seed is None:
            seed = self.phase_seed
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        phases = rng.uniform(0.0, 2.0 * np.pi, len(self.harmonics))
        terms = tuple(
            HarmonicTerm(freq, (amp / 2.0) * np.exp(1j * phase))
            for (freq, amp), phase in zip(self.harmonics, phases)
        )
        return AlmostPeriodicSignal(mean=self.mean, terms=terms)


def fourier_coefficient(times: np.ndarray, values: np.ndarray, sigma: float) -> complex:
    """Trapezoid estimate of (1/T) * int_0^T values(s) exp(-i sigma s) ds.

    Converges to the coefficient at sigma as the window grows, and to zero
    at off-spectrum frequencies.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.ndim != 1 or times.shape != values.shape or len(times) < 2:
        raise ValueError("need matching 1-d sample arrays with at least two points")
    window = times[-1] - times[0]
    integrand = values * np.exp(-1j * sigma * times)
    return complex(np.trapezoid(integrand, times) / window)


def signal_to_json(signal) -> dict:
    if isinstance(signal, AlmostPeriodicSignal):
        return {
            "type": "almost_periodic",
            "mean": signal.mean,
            "terms": [
                {"sigma": t.frequency, "re": t.coefficient.real, "im": t.coefficient.imag}
                for t in signal.terms
            ],
        }
    if isinstance(signal, StationaryEnvironment):
        return {
            "type": "stationary",
            "mean": signal.mean,
            "harmonics": [{"sigma": f, "amp": a} for f, a in signal.harmonics],
            "seed": signal.phase_seed,
        }
    raise TypeError(f"unknown signal {signal!r}")


def signal_from_json(doc: dict):
    kind = doc.get("type")
    if kind == "almost_periodic":
        terms = tuple(
            HarmonicTerm(float(t["sigma"]), complex(float(t["re"]), float(t.get("im", 0.0))))
            for t in doc.get("terms", [])
        )
        return AlmostPeriodicSignal(mean=float(doc["mean"]), terms=terms)
    if kind == "stationary":
        return StationaryEnvironment(
            mean=float(doc["mean"]),
            harmonics=tuple((float(h["sigma"]), float(h["amp"])) for h in doc.get("harmonics", [])),
            phase_seed=int(doc.get("seed", 0)),
        )
    raise ValueError(f"unsupported signal type {kind!r}")
