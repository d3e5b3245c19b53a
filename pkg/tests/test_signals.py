import numpy as np
import pytest

import homeostat as h
from homeostat.signals import fourier_coefficient, signal_from_json, signal_to_json

TWO_PLUS_COS5 = h.AlmostPeriodicSignal(2.0, (h.HarmonicTerm(5.0, 0.5),))


def test_eval_known_values():
    assert float(TWO_PLUS_COS5(0.0)) == pytest.approx(3.0)
    assert float(TWO_PLUS_COS5(np.pi / 10)) == pytest.approx(2.0, abs=1e-12)
    const = h.AlmostPeriodicSignal(4.0)
    assert float(const(17.3)) == 4.0


def test_eval_vectorized_real_and_nonnegative(rng):
    for _ in range(25):
        mean = rng.uniform(0.5, 5.0)
        k = int(rng.integers(0, 4))
        freqs = rng.uniform(0.5, 10.0, k)
        freqs = np.unique(freqs)
        budget = mean / (2 * len(freqs) + 1e-12) if len(freqs) else 0.0
        terms = tuple(
            h.HarmonicTerm(float(f), budget * rng.uniform(0.2, 0.9)
                           * np.exp(1j * rng.uniform(0, 2 * np.pi)))
            for f in freqs
        )
        sig = h.AlmostPeriodicSignal(mean, terms)
        t = rng.uniform(-50, 50, 500)
        values = sig(t)
        assert values.dtype == np.float64
        assert values.min() >= -1e-12


def test_negative_budget_rejected():
    with pytest.raises(ValueError):
        h.AlmostPeriodicSignal(1.0, (h.HarmonicTerm(5.0, 0.6),))   # 2*0.6 > 1


def test_zero_frequency_rejected():
    with pytest.raises(ValueError):
        h.HarmonicTerm(0.0, 0.5)


def test_conjugate_closure_checked():
    # an explicit +/- pair folds into one stored term when conjugate
    built = h.AlmostPeriodicSignal(2.0, (h.HarmonicTerm(5.0, 0.25 + 0.1j),
                                         h.HarmonicTerm(-5.0, 0.25 - 0.1j)))
    assert len(built.terms) == 1
    assert built.terms[0].coefficient == 0.25 + 0.1j
    with pytest.raises(ValueError):
        h.AlmostPeriodicSignal(2.0, (h.HarmonicTerm(5.0, 0.25 + 0.1j),
                                     h.HarmonicTerm(-5.0, 0.25 + 0.1j)))


def test_fourier_coefficient_recovers_terms():
    # window is an exact multiple of every period involved
    times = np.linspace(0.0, 200 * np.pi, 200_001)
    values = TWO_PLUS_COS5(times)
    assert abs(fourier_coefficient(times, values, 0.0) - 2.0) < 1e-6
    assert abs(fourier_coefficient(times, values, 5.0) - 0.5) < 1e-6
    assert abs(fourier_coefficient(times, values, 3.0)) < 1e-4


def test_fourier_coefficient_off_grid_window():
    # a window that is not period-aligned still converges at the 1/T rate
    times = np.arange(0.0, 500.0, 0.01)
    values = TWO_PLUS_COS5(times)
    assert abs(fourier_coefficient(times, values, 0.0) - 2.0) < 1e-3
    assert abs(fourier_coefficient(times, values, 5.0) - 0.5) < 1e-3


def test_realize_amplitude_and_determinism():
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),), phase_seed=9)
    sig_a = env.realize(seed=123)
    sig_b = env.realize(seed=123)
    sig_c = env.realize(seed=124)
    assert abs(sig_a.terms[0].coefficient) == pytest.approx(0.5, abs=1e-15)
    assert sig_a.terms[0].coefficient == sig_b.terms[0].coefficient
    assert sig_a.terms[0].coefficient != sig_c.terms[0].coefficient
    default = env.realize()
    assert default.terms[0].coefficient == env.realize(9).terms[0].coefficient


def test_realize_zero_harmonics_constant():
    env = h.StationaryEnvironment(mean=3.0)
    sig = env.realize(seed=1)
    assert sig.terms == ()
    assert float(sig(11.0)) == 3.0


def test_realizations_share_time_average():
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    horizon = 400.0
    times = np.arange(0.0, horizon, 0.01)
    for seed in (1, 2):
        sig = env.realize(seed=seed)
        c0 = fourier_coefficient(times, sig(times), 0.0)
        assert abs(c0 - 2.0) < 2.0 / horizon * 4


def test_spectral_measure_atoms():
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    atoms = env.spectral_measure()
    assert atoms == [(-5.0, 0.25), (5.0, 0.25)]
    assert env.variance == pytest.approx(0.5)
    empty = h.StationaryEnvironment(mean=1.0)
    assert empty.spectral_measure() == []
    assert empty.variance == 0.0


def test_time_variance_matches_spectral_mass():
    # ergodic-in-time oracle: long-run sample variance of one realization
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    sig = env.realize(seed=4)
    times = np.arange(0.0, 2000.0, 0.02)
    values = sig(times)
    assert abs(np.var(values) - 0.5) < 0.01


def test_autocorrelation_matches_spectrum():
    env = h.StationaryEnvironment(mean=2.0, harmonics=((2.0, 0.8), (5.0, 0.6)))
    sig = env.realize(seed=8)
    dt = 0.01
    times = np.arange(0.0, 3000.0, dt)
    centered = sig(times) - 2.0
    for lag in (0.0, 0.35, 1.2):
        k = int(round(lag / dt))
        n = len(times) - k
        empirical = float(np.mean(centered[k:] * centered[:n]))
        expected = 0.5 * (0.8 ** 2 * np.cos(2.0 * lag) + 0.6 ** 2 * np.cos(5.0 * lag))
        assert abs(empirical - expected) < 0.01


def test_environment_validation():
    with pytest.raises(ValueError):
        h.StationaryEnvironment(mean=1.0, harmonics=((5.0, 2.0),))  # amp > mean
    with pytest.raises(ValueError):
        h.StationaryEnvironment(mean=1.0, harmonics=((0.0, 0.5),))  # atom at zero
    with pytest.raises(ValueError):
        h.StationaryEnvironment(mean=1.0, harmonics=((5.0, 0.2), (5.0, 0.2)))


def test_scaled_signal():
    scaled = TWO_PLUS_COS5.scaled(10.0)
    assert scaled.mean == pytest.approx(20.0)
    assert abs(scaled.terms[0].coefficient) == pytest.approx(5.0)
    t = np.linspace(0, 3, 50)
    assert np.allclose(scaled(t), 10.0 * TWO_PLUS_COS5(t))


def test_signal_json_roundtrip():
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0), (7.0, 0.5)), phase_seed=3)
    for sig in (TWO_PLUS_COS5, h.AlmostPeriodicSignal(4.0), env):
        doc = signal_to_json(sig)
        back = signal_from_json(doc)
        assert back == sig
    with pytest.raises(ValueError):
        signal_from_json({"type": "white_noise"})


def test_envelope_bounds_signal():
    sig = h.AlmostPeriodicSignal(2.0, (h.HarmonicTerm(5.0, 0.3 + 0.4j),))
    t = np.linspace(0, 20, 5000)
    assert sig(t).max() <= sig.envelope + 1e-12
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    real = env.realize(seed=5)
    assert real(t).max() <= env.envelope + 1e-12
