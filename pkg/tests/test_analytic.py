import numpy as np
import pytest

import homeostat as h
from homeostat.analytic import default_sup_window

from helpers import (
    SIGNALS,
    SIG_MAIN,
    general_loop,
    general_twobytwo,
    node,
)


def single_node_spec():
    n1 = node(1)
    return h.NetworkSpec(1, 1, (n1,), exits=(h.Exit(n1, 1.0, h.Exponential(1.0)),),
                         inputs=((n1, "main"),))


def exp_chain(depth):
    nodes = tuple(node(i + 1) for i in range(depth + 1))
    edges = tuple(h.Edge(nodes[i], nodes[i + 1], 1.0, h.Exponential(1.0))
                  for i in range(depth))
    return h.NetworkSpec(depth + 1, 1, nodes, edges,
                         exits=(h.Exit(nodes[-1], 1.0, h.Exponential(1.0)),),
                         inputs=((nodes[0], "main"),))


def quadrature_response(kernel, source_pos, node_pos, sigma):
    """Independent oracle: trapezoid quadrature of exp(-i sigma t) * P(t)."""
    t = kernel.grid.times
    integrand = np.exp(-1j * sigma * t) * kernel.occupancy[source_pos, node_pos]
    return np.trapezoid(integrand, dx=kernel.grid.dt)


# --- arrival densities --------------------------------------------------------

def test_arrival_density_single_edge():
    spec = exp_chain(1)
    grid = h.TimeGrid(dt=0.01, horizon=20.0)
    dens, residual = h.arrival_density(spec, node(1), grid)
    t = grid.times
    assert np.allclose(dens[1], np.exp(-t), atol=1e-9)
    assert abs(dens[1][100] - np.exp(-1.0)) < 1e-6
    assert residual < 1e-10


def test_arrival_density_two_hops_is_gamma():
    spec = exp_chain(2)
    grid = h.TimeGrid(dt=0.01, horizon=25.0)
    dens, _ = h.arrival_density(spec, node(1), grid)
    t = grid.times
    assert np.allclose(dens[2], t * np.exp(-t), atol=5e-5)
    peak = dens[2][100]
    assert peak == pytest.approx(np.exp(-1.0), abs=1e-4)


def test_arrival_density_loop_mass():
    spec = general_loop()
    grid = h.TimeGrid(dt=0.02, horizon=60.0)
    dens, _ = h.arrival_density(spec, node(1), grid)
    mass = np.trapezoid(dens[1], dx=grid.dt)
    assert mass == pytest.approx(2.0, rel=0.01)


def test_arrival_density_convergence_error():
    # spectral radius very close to 1 converges too slowly for a tiny cap
    spec = general_loop()
    grid = h.TimeGrid(dt=0.1, horizon=5.0)
    with pytest.raises(h.KernelConvergenceError):
        h.arrival_density(spec, node(1), grid, tol=1e-12, max_iterations=3)


# --- transition kernel ---------------------------------------------------------

def test_kernel_single_node_flag_on_off():
    spec = single_node_spec()
    grid = h.TimeGrid(dt=0.01, horizon=10.0)
    on = h.transition_kernel(spec, grid, include_injection_sojourn=True)
    off = h.transition_kernel(spec, grid, include_injection_sojourn=False)
    t = grid.times
    assert np.allclose(on.occupancy[0, 0], np.exp(-t), atol=1e-12)
    assert on.occupancy[0, 0, 0] == 1.0
    assert np.all(off.occupancy[0, 0] == 0.0)


def test_kernel_single_edge_closed_form_and_mass():
    spec = exp_chain(1)
    grid = h.TimeGrid(dt=0.01, horizon=25.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=False)
    t = grid.times
    assert np.allclose(kern.occupancy[0, 1], t * np.exp(-t), atol=5e-5)
    # time integral equals expected visits times mean sojourn
    assert kern.occupancy_mass()[0, 1] == pytest.approx(1.0, rel=1e-3)


def test_kernel_probability_bounds():
    for spec in (exp_chain(2), general_loop(), general_twobytwo()):
        grid = h.TimeGrid(dt=0.02, horizon=30.0)
        kern = h.transition_kernel(spec, grid, include_injection_sojourn=True,
                                   sources=spec.nodes)
        assert kern.occupancy.min() >= 0.0
        assert kern.occupancy.max() <= 1.0 + 1e-6


def test_kernel_mass_identity_all_pairs_loop():
    spec = general_loop()
    grid = h.TimeGrid(dt=0.02, horizon=70.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=False,
                               sources=spec.nodes)
    expected = h.fundamental_matrix(spec) * h.mean_sojourns(spec)[None, :]
    assert np.allclose(kern.occupancy_mass(), expected, rtol=0.01, atol=1e-9)


# --- transient means ------------------------------------------------------------

def test_transient_mean_single_node_closed_form():
    spec = single_node_spec()
    grid = h.TimeGrid(dt=0.005, horizon=10.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=True)
    trace = h.transient_mean(spec, kern, {"main": h.AlmostPeriodicSignal(2.0)})
    t = grid.times
    assert np.allclose(trace.mean[:, 0], 2.0 * (1.0 - np.exp(-t)), atol=1e-5)
    at3 = trace.mean[int(round(3.0 / grid.dt)), 0]
    assert at3 == pytest.approx(1.90043, abs=1e-4)


def test_transient_mean_zero_signal():
    spec = exp_chain(2)
    grid = h.TimeGrid(dt=0.02, horizon=5.0)
    kern = h.transition_kernel(spec, grid)
    trace = h.transient_mean(spec, kern, {"main": h.AlmostPeriodicSignal(0.0)})
    assert np.all(trace.mean == 0.0)


def test_transient_mean_rejects_unrealized_environment():
    spec = single_node_spec()
    grid = h.TimeGrid(dt=0.05, horizon=2.0)
    kern = h.transition_kernel(spec, grid)
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    with pytest.raises(TypeError):
        h.transient_mean(spec, kern, {"main": env})


# --- spectral responses -----------------------------------------------------------

def test_spectral_response_zero_frequency_limit():
    spec = general_loop()
    g0 = h.spectral_response(spec, 0.0, include_injection_sojourn=False)
    expected = h.fundamental_matrix(spec) * h.mean_sojourns(spec)[None, :]
    assert np.allclose(g0.matrix, expected, atol=1e-12)
    # continuity towards zero
    g_small = h.spectral_response(spec, 1e-5, include_injection_sojourn=False)
    assert np.allclose(g_small.matrix, expected, atol=1e-3)


def test_spectral_response_single_edge_modulus():
    spec = exp_chain(1)
    g = h.spectral_response(spec, 1.0, include_injection_sojourn=False)
    assert abs(g.matrix[0, 1]) == pytest.approx(0.5, abs=1e-12)
    grid = h.TimeGrid(dt=0.005, horizon=40.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=False)
    oracle = quadrature_response(kern, 0, 1, 1.0)
    assert abs(g.matrix[0, 1] - oracle) < 1e-5


def test_spectral_response_chain_attenuation_value():
    spec = exp_chain(2)
    g = h.spectral_response(spec, 5.0, include_injection_sojourn=False)
    assert abs(g.matrix[0, 2]) == pytest.approx(26.0 ** -1.5, rel=1e-12)
    assert abs(g.matrix[0, 2]) == pytest.approx(7.54e-3, abs=1e-5)
    grid = h.TimeGrid(dt=0.004, horizon=40.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=False)
    oracle = quadrature_response(kern, 0, 2, 5.0)
    assert abs(g.matrix[0, 2] - oracle) < 1e-5


def test_spectral_response_injection_term():
    spec = single_node_spec()
    g = h.spectral_response(spec, 5.0, include_injection_sojourn=True)
    assert abs(g.matrix[0, 0]) == pytest.approx(26.0 ** -0.5, rel=1e-12)
    g_off = h.spectral_response(spec, 5.0, include_injection_sojourn=False)
    assert g_off.matrix[0, 0] == 0.0


def test_spectral_response_conjugate_symmetry():
    spec = general_twobytwo()
    for sigma in (0.7, 2.0, 6.3):
        plus = h.spectral_response(spec, sigma).matrix
        minus = h.spectral_response(spec, -sigma).matrix
        assert np.allclose(np.conj(plus), minus, atol=1e-12)


def _random_mixed_spec(rng, size):
    """Random sub-stochastic routing with mixed delay families."""
    nodes = tuple(node(i + 1) for i in range(size))
    P = rng.uniform(0, 1, (size, size))
    np.fill_diagonal(P, 0.0)
    P = P / P.sum(axis=1, keepdims=True) * rng.uniform(0.3, 0.85)
    def pick_delay():
        kind = rng.integers(0, 3)
        if kind == 0:
            return h.Exponential(float(rng.uniform(0.5, 3.0)))
        if kind == 1:
            return h.Gamma(float(rng.uniform(1.0, 4.0)), float(rng.uniform(0.5, 3.0)))
        return h.Uniform(float(rng.uniform(0.5, 3.0)))
    edges = tuple(h.Edge(nodes[i], nodes[j], float(P[i, j]), pick_delay())
                  for i in range(size) for j in range(size) if P[i, j] > 0)
    exits = tuple(h.Exit(nodes[i], float(1.0 - P[i].sum()), pick_delay())
                  for i in range(size))
    return h.NetworkSpec(size, 1, nodes, edges, exits,
                         inputs=((nodes[0], "main"),))


def test_attenuation_inequality_randomized(rng):
    # |g_ij(sigma)| <= 2/(gap*(1-delta)) * delta^distance for |sigma| >= gap,
    # over random networks with mixed delay families
    for trial in range(25):
        size = int(rng.integers(2, 6))
        spec = _random_mixed_spec(rng, size)
        gap = float(rng.uniform(1.0, 8.0))
        params = h.class_parameters(
            spec, {"main": h.AlmostPeriodicSignal(2.0)}, gap=gap)
        dist = h.input_distances(spec)
        for _ in range(5):
            sigma = float(rng.uniform(gap, gap + 20.0))
            g = h.spectral_response(spec, sigma, include_injection_sojourn=False)
            row = 0
            for j in range(spec.size):
                if np.isinf(dist[j]):
                    continue
                bound = (2.0 / (gap * (1.0 - params.attenuation))
                         * params.attenuation ** dist[j])
                assert abs(g.matrix[row, j]) <= bound + 1e-12


# --- limiting means -----------------------------------------------------------------

def test_limit_mean_constant_input_is_flat():
    spec = exp_chain(2)
    times = np.linspace(0.0, 20.0, 101)
    result = h.limit_mean(spec, {"main": h.AlmostPeriodicSignal(2.0)}, times,
                          include_injection_sojourn=False)
    levels = h.steady_levels(spec, {node(1): 2.0})
    assert np.allclose(result.trace.mean, levels[None, :], atol=1e-12)
    assert np.allclose(result.levels, levels, atol=1e-12)


def test_limit_mean_single_node_amplitude():
    spec = single_node_spec()
    window = default_sup_window([5.0])
    result = h.limit_mean(spec, {"main": SIG_MAIN}, window,
                          include_injection_sojourn=True)
    deviation = np.abs(result.trace.mean[:, 0] - result.levels[0]).max()
    assert deviation == pytest.approx(26.0 ** -0.5, rel=1e-3)
    assert result.levels[0] == pytest.approx(2.0)


def test_limit_mean_matches_transient_late():
    spec = exp_chain(1)
    grid = h.TimeGrid(dt=0.005, horizon=24.0)
    kern = h.transition_kernel(spec, grid, include_injection_sojourn=True)
    transient = h.transient_mean(spec, kern, SIGNALS)
    limit = h.limit_mean(spec, SIGNALS, grid.times, include_injection_sojourn=True)
    gaps = []
    for horizon in (6.0, 12.0, 24.0):
        lo = int(round((horizon - 3.0) / grid.dt))
        hi = int(round(horizon / grid.dt)) + 1
        gaps.append(np.abs(transient.mean[lo:hi] - limit.trace.mean[lo:hi]).max())
    assert gaps[1] < gaps[0]
    assert gaps[2] < gaps[1]


# --- homeostasis report ----------------------------------------------------------------

def test_homeostasis_depth2_chain_numbers():
    spec = exp_chain(2)
    report = h.homeostasis_report(spec, {"main": SIG_MAIN}, gap=5.0)
    delta = 26.0 ** -0.5
    row = report.rows[2]
    assert row.distance == 2.0
    assert row.sup_deviation == pytest.approx(26.0 ** -1.5, rel=2e-3)
    assert row.bound == pytest.approx(2.0 / (5.0 * (1 - delta)) * delta ** 2, rel=1e-12)
    assert row.bound == pytest.approx(0.01914, abs=1e-5)
    assert report.all_passed


def test_homeostasis_constant_input_zero_deviation():
    spec = exp_chain(2)
    report = h.homeostasis_report(spec, {"main": h.AlmostPeriodicSignal(2.0)}, gap=5.0)
    assert all(row.sup_deviation <= 1e-12 for row in report.rows)
    assert report.all_passed


def test_homeostasis_decay_slope_chains():
    devs = []
    for depth in range(1, 7):
        spec = exp_chain(depth)
        report = h.homeostasis_report(spec, {"main": SIG_MAIN}, gap=5.0)
        devs.append(report.rows[-1].sup_deviation)
    slope = np.polyfit(np.arange(1, 7), np.log(devs), 1)[0]
    assert abs(slope - np.log(26.0 ** -0.5)) <= 0.05


def test_homeostasis_report_serializes():
    spec = exp_chain(1)
    report = h.homeostasis_report(spec, {"main": SIG_MAIN}, gap=5.0)
    doc = report.to_dict()
    assert doc["all_passed"] is True
    assert doc["params"]["attenuation"] == pytest.approx(26.0 ** -0.5)
    assert len(doc["nodes"]) == 2


def test_homeostasis_report_unreachable_node():
    n1, n2 = node(1), node(2)
    spec = h.NetworkSpec(2, 1, (n1, n2),
                         exits=(h.Exit(n1, 1.0, h.Exponential(1.0)),
                                h.Exit(n2, 1.0, h.Exponential(1.0))),
                         inputs=((n1, "main"),))
    report = h.homeostasis_report(spec, {"main": SIG_MAIN}, gap=5.0)
    unreachable = report.rows[1]
    assert np.isinf(unreachable.distance)
    assert unreachable.sup_deviation == 0.0
    assert unreachable.bound == 0.0
    assert unreachable.passed
    assert report.to_dict()["nodes"][1]["distance"] is None


# --- variance response -------------------------------------------------------------------

def test_variance_response_single_node():
    n1 = node(1)
    spec = h.NetworkSpec(1, 1, (n1,), exits=(h.Exit(n1, 1.0, h.Exponential(1.0)),),
                         inputs=((n1, "env"),))
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    report = h.variance_response(spec, {"env": env}, gap=5.0,
                                 include_injection_sojourn=True)
    row = report.rows[0]
    assert row.variance == pytest.approx(0.019231, abs=1e-6)
    assert row.mean_level == pytest.approx(2.0)
    assert row.passed


def test_variance_response_depth2_chain():
    nodes = tuple(node(i + 1) for i in range(3))
    spec = h.NetworkSpec(3, 1, nodes,
                         edges=tuple(h.Edge(nodes[i], nodes[i + 1], 1.0, h.Exponential(1.0))
                                     for i in range(2)),
                         exits=(h.Exit(nodes[-1], 1.0, h.Exponential(1.0)),),
                         inputs=((nodes[0], "env"),))
    env = h.StationaryEnvironment(mean=2.0, harmonics=((5.0, 1.0),))
    report = h.variance_response(spec, {"env": env}, gap=5.0)
    row = report.rows[2]
    assert row.variance == pytest.approx(26.0 ** -3 / 2.0, rel=1e-12)
    assert row.variance == pytest.approx(2.845e-5, rel=1e-3)
    assert row.variance <= row.bound
    assert report.all_passed


def test_variance_response_zero_harmonics():
    n1 = node(1)
    spec = h.NetworkSpec(1, 1, (n1,), exits=(h.Exit(n1, 1.0, h.Exponential(1.0)),),
                         inputs=((n1, "env"),))
    env = h.StationaryEnvironment(mean=2.0)
    report = h.variance_response(spec, {"env": env}, gap=5.0)
    assert report.rows[0].variance == 0.0


def test_variance_response_atom_in_gap_raises():
    n1 = node(1)
    spec = h.NetworkSpec(1, 1, (n1,), exits=(h.Exit(n1, 1.0, h.Exponential(1.0)),),
                         inputs=((n1, "env"),))
    env = h.StationaryEnvironment(mean=2.0, harmonics=((2.0, 1.0),))
    with pytest.raises(h.SpectralGapError):
        h.variance_response(spec, {"env": env}, gap=5.0)


def test_variance_response_rejects_deterministic_signal():
    spec = single_node_spec()
    with pytest.raises(TypeError):
        h.variance_response(spec, {"main": SIG_MAIN}, gap=5.0)


# --- realness ------------------------------------------------------------------------------

def test_limit_mean_is_real_dtype():
    spec = general_twobytwo()
    times = np.linspace(0, 10, 201)
    result = h.limit_mean(spec, SIGNALS, times)
    assert result.trace.mean.dtype == np.float64
    assert np.all(np.isfinite(result.trace.mean))
