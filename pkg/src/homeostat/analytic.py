"""Deterministic computation core.

Everything here is grid-based quadrature or closed-form linear algebra:

* arrival densities solve the renewal (Volterra) system for walks started at
  a source node, by accumulating path-length contributions until the latest
  contribution is negligible (geometric convergence under a sub-critical
  routing matrix);
* transition kernels turn arrival densities into occupancy probabilities by
  convolving with the residence survival function;
* transient means convolve input rates with transition kernels;
* spectral responses give the closed-form frequency response of every
  (source, node) pair and power the limiting (large-time) mean series, the
  flatness report, and the ensemble variance of stationary inputs.

The ``include_injection_sojourn`` flag controls whether a freshly injected
molecule is counted at its injection node during its first transit.  The
event-driven simulator counts it there, so the flag defaults to on where
traces are meant to be compared against simulation; the pure path-sum form
(flag off) is what the flatness analysis uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import KernelConvergenceError, ResponseSingularError
from .grids import TimeGrid, conv_trapezoid, cumulative_trapezoid
from .network import (
    ClassParameters,
    NetworkSpec,
    NodeId,
    class_parameters,
    fundamental_matrix,
    input_distances,
    mean_rates_from_signals,
    mean_sojourns,
    spectral_radius,
    steady_levels,
)
from .signals import AlmostPeriodicSignal, StationaryEnvironment
from .traces import OccupancyTrace

__all__ = [
    "TransitionKernelGrid",
    "SpectralResponse",
    "LimitMeanResult",
    "HomeostasisReport",
    "VarianceReport",
    "arrival_density",
    "transition_kernel",
    "transient_mean",
    "spectral_response",
    "limit_mean",
    "default_sup_window",
    "homeostasis_report",
    "variance_response",
]

DEFAULT_KERNEL_TOL = 1e-10
DEFAULT_MAX_ITERATIONS = 100_000


def _edge_weights(spec: NetworkSpec, times: np.ndarray) -> list[tuple[int, int, np.ndarray]]:
    """Per-edge weighted travel-time densities on the grid."""
    return [
        (spec.node_index(e.source), spec.node_index(e.target), e.prob * e.delay.grid_density(times))
        for e in spec.edges
    ]


def _arrival_from(
    spec: NetworkSpec,
    source_idx: int,
    weights: list[tuple[int, int, np.ndarray]],
    dt: float,
    n: int,
    tol: float,
    max_iterations: int,
) -> tuple[np.ndarray, float]:
    """Accumulate arrival densities for walks started at ``source_idx``.

    The k-th pass adds the contribution of paths with exactly k+1 hops; the
    iteration stops once the newest contribution is below ``tol`` everywhere.
    """
    size = spec.size
    inc = np.zeros((size, n))
    for src, dst, w in weights:
        if src == source_idx:
            inc[dst] += w
    total = inc.copy()
    residual = float(inc.max(initial=0.0))
    iterations = 0
    while residual >= tol:
        iterations += 1
        if iterations > max_iterations:
            raise KernelConvergenceError(
                f"arrival-density iteration still above {tol:g} after "
                f"{max_iterations} passes (routing spectral radius "
                f"{spectral_radius(spec.routing_matrix()):.6g})"
            )
        nxt = np.zeros_like(inc)
        for src, dst, w in weights:
            if inc[src].any():
                nxt[dst] += conv_trapezoid(inc[src], w, dt)
        total += nxt
        inc = nxt
        residual = float(inc.max(initial=0.0))
    return total, residual


def arrival_density(
    spec: NetworkSpec,
    source: NodeId,
    grid: TimeGrid,
    tol: float = DEFAULT_KERNEL_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> tuple[np.ndarray, float]:
    """Arrival-rate densities at every node for a walk injected at ``source``.

    Returns an array of shape (n_nodes, n_times) whose row j integrates to
    the expected number of visits to node j, plus the iteration residual.
    """
    times = grid.times
    weights = _edge_weights(spec, times)
    return _arrival_from(spec, spec.node_index(source), weights, grid.dt, grid.n,
                         tol, max_iterations)


@dataclass
class TransitionKernelGrid:
    """Gridded occupancy probabilities for walks from each source node.

    ``occupancy[s, j, m]`` is the probability that a walk injected at
    ``sources[s]`` at time 0 occupies node j at time ``grid.times[m]``;
    ``arrival[s, j, m]`` is the corresponding arrival-rate density.
    """

    grid: TimeGrid
    sources: tuple[NodeId, ...]
    labels: tuple[str, ...]
    arrival: np.ndarray
    occupancy: np.ndarray
    include_injection_sojourn: bool
    residuals: tuple[float, ...]

    def source_index(self, node: NodeId) -> int:
        return self.sources.index(node)

    def arrival_mass(self) -> np.ndarray:
        """Trapezoid mass of each arrival stream (expected visit counts)."""
        return np.trapezoid(self.arrival, dx=self.grid.dt, axis=2)

    def occupancy_mass(self) -> np.ndarray:
        """Trapezoid time-integral of each occupancy curve."""
        return np.trapezoid(self.occupancy, dx=self.grid.dt, axis=2)

    def occupancy_tail(self) -> np.ndarray:
        """Remaining occupancy mass beyond each grid time, shape (S, M, n)."""
        total = self.occupancy_mass()[:, :, None]
        running = np.stack([
            np.stack([cumulative_trapezoid(self.occupancy[s, j], self.grid.dt)
                      for j in range(self.occupancy.shape[1])])
            for s in range(self.occupancy.shape[0])
        ])
        return np.maximum(total - running, 0.0)


def transition_kernel(
    spec: NetworkSpec,
    grid: TimeGrid,
    include_injection_sojourn: bool = True,
    sources: Sequence[NodeId] | None = None,
    tol: float = DEFAULT_KERNEL_TOL,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
) -> TransitionKernelGrid:
    """Occupancy kernel rows for the given sources (default: the input set)."""
    if sources is None:
        seen: list[NodeId] = []
        for node in spec.input_nodes:
            if node not in seen:
                seen.append(node)
        sources = seen
    sources = tuple(sources)
    times = grid.times
    weights = _edge_weights(spec, times)
    survival = np.stack([1.0 - spec.sojourn(node).cdf(times) for node in spec.nodes])
    arrival = np.zeros((len(sources), spec.size, grid.n))
    occupancy = np.zeros_like(arrival)
    residuals = []
    for s, source in enumerate(sources):
        src_idx = spec.node_index(source)
        dens, residual = _arrival_from(spec, src_idx, weights, grid.dt, grid.n,
                                       tol, max_iterations)
        arrival[s] = dens
        residuals.append(residual)
        for j in range(spec.size):
            occupancy[s, j] = conv_trapezoid(dens[j], survival[j], grid.dt)
        if include_injection_sojourn:
            occupancy[s, src_idx] += survival[src_idx]
    return TransitionKernelGrid(
        grid=grid,
        sources=sources,
        labels=spec.labels,
        arrival=arrival,
        occupancy=occupancy,
        include_injection_sojourn=include_injection_sojourn,
        residuals=tuple(residuals),
    )


def transient_mean(
    spec: NetworkSpec,
    kernel: TransitionKernelGrid,
    signals: Mapping[str, AlmostPeriodicSignal],
) -> OccupancyTrace:
    """Mean occupancy from an empty start: input rates convolved with the kernel."""
    times = kernel.grid.times
    mean = np.zeros((kernel.grid.n, spec.size))
    for node, signal_id in spec.inputs:
        signal = signals[signal_id]
        if isinstance(signal, StationaryEnvironment):
            raise TypeError("realize stationary environments before computing transient means")
        rate = signal(times)
        s = kernel.source_index(node)
        for j in range(spec.size):
            mean[:, j] += conv_trapezoid(rate, kernel.occupancy[s, j], kernel.grid.dt)
    return OccupancyTrace(
        times=times,
        labels=spec.labels,
        mean=mean,
        provenance="analytic",
        meta={
            "dt": kernel.grid.dt,
            "horizon": kernel.grid.horizon,
            "include_injection_sojourn": kernel.include_injection_sojourn,
        },
    )


@dataclass(frozen=True)
class SpectralResponse:
    """Complex frequency response of every (source, node) pair at one frequency."""

    sigma: float
    matrix: np.ndarray
    include_injection_sojourn: bool


def spectral_response(
    spec: NetworkSpec,
    sigma: float,
    include_injection_sojourn: bool = False,
) -> SpectralResponse:
    """Closed-form frequency response g[i, j](sigma).

    For sigma != 0 this is ``(I - Psi)^-1 Psi`` scaled per column by
    ``(1 - cf_j(-sigma)) / (i sigma)`` where ``Psi[i, k]`` is the routing
    probability times the edge characteristic function at ``-sigma`` and
    ``cf_j`` belongs to the residence mixture of the column node.  At
    sigma = 0 the analytic limit (expected visits times mean sojourn) is
    returned instead of the 0/0 form.  With the injection flag on, each
    diagonal entry additionally carries the injection-sojourn response.
    """
    size = spec.size
    if sigma == 0.0:
        mass = fundamental_matrix(spec) * mean_sojourns(spec)[None, :]
        matrix = mass.astype(complex)
        if include_injection_sojourn:
            matrix[np.diag_indices(size)] += mean_sojourns(spec)
        return SpectralResponse(0.0, matrix, include_injection_sojourn)

    psi = np.zeros((size, size), dtype=complex)
    for e in spec.edges:
        value = complex(e.delay.characteristic_function(np.asarray(-sigma)))
        psi[spec.node_index(e.source), spec.node_index(e.target)] += e.prob * value
    try:
        transfer = np.linalg.solve(np.eye(size) - psi, psi)
    except np.linalg.LinAlgError as exc:
        raise ResponseSingularError(
            f"frequency-response system singular at sigma={sigma:g}"
        ) from exc
    tail = np.array([
        (1.0 - complex(spec.sojourn(node).characteristic_function(np.asarray(-sigma))))
        / (1j * sigma)
        for node in spec.nodes
    ])
    matrix = transfer * tail[None, :]
    if include_injection_sojourn:
        matrix[np.diag_indices(size)] += tail
    return SpectralResponse(sigma, matrix, include_injection_sojourn)


class _ResponseCache:
    def __init__(self, spec: NetworkSpec, include_injection_sojourn: bool) -> None:
        self.spec = spec
        self.flag = include_injection_sojourn
        self._cache: dict[float, np.ndarray] = {}

    def matrix(self, sigma: float) -> np.ndarray:
        if sigma not in self._cache:
            self._cache[sigma] = spectral_response(self.spec, sigma, self.flag).matrix
        return self._cache[sigma]


def _occupancy_mass_matrix(spec: NetworkSpec, include_injection_sojourn: bool) -> np.ndarray:
    mass = fundamental_matrix(spec) * mean_sojourns(spec)[None, :]
    if include_injection_sojourn:
        mass[np.diag_indices(spec.size)] += mean_sojourns(spec)
    return mass


@dataclass
class LimitMeanResult:
    """Limiting mean series and its constant part (flag-consistent)."""

    trace: OccupancyTrace
    levels: np.ndarray


def limit_mean(
    spec: NetworkSpec,
    signals: Mapping[str, AlmostPeriodicSignal],
    times: np.ndarray,
    include_injection_sojourn: bool = True,
) -> LimitMeanResult:
    """Large-time mean occupancy as an explicit trigonometric series.

    The constant part is mean rate times occupancy mass summed over inputs;
    each oscillatory input term contributes its coefficient times the
    frequency response of the (input, node) pair.
    """
    times = np.asarray(times, dtype=float)
    mass = _occupancy_mass_matrix(spec, include_injection_sojourn)
    levels = np.zeros(spec.size)
    mean = np.zeros((len(times), spec.size))
    cache = _ResponseCache(spec, include_injection_sojourn)
    for node, signal_id in spec.inputs:
        signal = signals[signal_id]
        if isinstance(signal, StationaryEnvironment):
            raise TypeError("realize stationary environments before computing limit means")
        row = spec.node_index(node)
        levels += signal.mean * mass[row]
        for term in signal.terms:
            g_row = cache.matrix(term.frequency)[row]
            phase = np.exp(1j * term.frequency * times)
            mean += 2.0 * np.real(term.coefficient * phase[:, None] * g_row[None, :])
    mean += levels[None, :]
    trace = OccupancyTrace(
        times=times,
        labels=spec.labels,
        mean=mean,
        provenance="analytic",
        meta={"kind": "limit", "include_injection_sojourn": include_injection_sojourn},
    )
    return LimitMeanResult(trace=trace, levels=levels)


def default_sup_window(frequencies: Sequence[float]) -> np.ndarray:
    """Evaluation window for the supremum of an almost-periodic series.

    Covers 50 cycles of the slowest harmonic with 100 points per cycle of
    the fastest one; a single point suffices for constant signals.
    """
    freqs = [f for f in frequencies if f > 0]
    if not freqs:
        return np.array([0.0])
    window = 50.0 * 2.0 * np.pi / min(freqs)
    step = 2.0 * np.pi / (100.0 * max(freqs))
    return np.arange(0.0, window + step / 2.0, step)


def _resolve_signals(signals: Mapping[str, object]) -> dict[str, AlmostPeriodicSignal]:
    """Realize any stationary environments with their own phase seeds."""
    resolved: dict[str, AlmostPeriodicSignal] = {}
    for key, signal in signals.items():
        if isinstance(signal, StationaryEnvironment):
            resolved[key] = signal.realize()
        else:
            resolved[key] = signal
    return resolved


@dataclass
class HomeostasisNodeRow:
    label: str
    distance: float
    steady_level: float
    sup_deviation: float
    bound: float
    passed: bool


@dataclass
class HomeostasisReport:
    """Per-node flatness check: limiting deviation against the decay bound."""

    rows: list[HomeostasisNodeRow]
    params: ClassParameters
    tolerance: float
    meta: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "params": self.params.to_dict(),
            "tolerance": self.tolerance,
            "nodes": [
                {
                    "node": row.label,
                    "distance": None if math.isinf(row.distance) else int(row.distance),
                    "steady_level": row.steady_level,
                    "sup_deviation": row.sup_deviation,
                    "bound": row.bound,
                    "passed": row.passed,
                }
                for row in self.rows
            ],
            "meta": self.meta,
        }


def homeostasis_report(
    spec: NetworkSpec,
    signals: Mapping[str, object],
    gap: float,
    window: np.ndarray | None = None,
    tolerance: float = 1e-9,
) -> HomeostasisReport:
    """Check that limiting means flatten towards the steady levels.

    The limiting series is evaluated without the injection-sojourn term, so
    the deviation at every node, inputs included, is pure routing response;
    each node's supremum deviation over the window is compared against
    ``deviation_bound * attenuation ** distance``.
    """
    params = class_parameters(spec, signals, gap)
    resolved = _resolve_signals(signals)
    if window is None:
        freqs: list[float] = []
        for _, signal_id in spec.inputs:
            freqs.extend(resolved[signal_id].frequencies)
        window = default_sup_window(freqs)
    result = limit_mean(spec, resolved, window, include_injection_sojourn=False)
    levels = steady_levels(spec, mean_rates_from_signals(spec, resolved))
    distances = input_distances(spec)
    deviation = np.max(np.abs(result.trace.mean - levels[None, :]), axis=0)
    rows = []
    for j, label in enumerate(spec.labels):
        dist = float(distances[j])
        bound = params.deviation_bound * params.attenuation ** dist
        rows.append(HomeostasisNodeRow(
            label=label,
            distance=dist,
            steady_level=float(levels[j]),
            sup_deviation=float(deviation[j]),
            bound=float(bound),
            passed=bool(deviation[j] <= bound + tolerance),
        ))
    return HomeostasisReport(
        rows=rows,
        params=params,
        tolerance=tolerance,
        meta={"window_points": len(window), "window_end": float(window[-1])},
    )


@dataclass
class VarianceNodeRow:
    label: str
    distance: float
    mean_level: float
    variance: float
    bound: float
    passed: bool


@dataclass
class VarianceReport:
    """Ensemble variance of the limiting mean under stationary inputs."""

    rows: list[VarianceNodeRow]
    params: ClassParameters
    tolerance: float
    meta: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(row.passed for row in self.rows)

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "params": self.params.to_dict(),
            "tolerance": self.tolerance,
            "nodes": [
                {
                    "node": row.label,
                    "distance": None if math.isinf(row.distance) else int(row.distance),
                    "mean_level": row.mean_level,
                    "variance": row.variance,
                    "bound": row.bound,
                    "passed": row.passed,
                }
                for row in self.rows
            ],
            "meta": self.meta,
        }


def variance_response(
    spec: NetworkSpec,
    signals: Mapping[str, StationaryEnvironment],
    gap: float,
    include_injection_sojourn: bool = True,
    tolerance: float = 1e-12,
) -> VarianceReport:
    """Closed-form ensemble variance of the limiting means over random phases.

    Every input must carry a stationary environment.  Each spectral atom
    contributes its mass times the squared response magnitude; the result is
    compared against ``variance_bound * attenuation ** (2 * distance)``.
    """
    for node, signal_id in spec.inputs:
        if not isinstance(signals[signal_id], StationaryEnvironment):
            raise TypeError(
                f"input {signal_id!r} at {node.label} is not a stationary environment"
            )
    params = class_parameters(spec, signals, gap)
    mass = _occupancy_mass_matrix(spec, include_injection_sojourn)
    cache = _ResponseCache(spec, include_injection_sojourn)
    levels = np.zeros(spec.size)
    variance = np.zeros(spec.size)
    for node, signal_id in spec.inputs:
        env = signals[signal_id]
        row = spec.node_index(node)
        levels += env.mean * mass[row]
        for freq, amp in env.harmonics:
            g_row = cache.matrix(freq)[row]
            variance += 2.0 * (amp * amp / 4.0) * np.abs(g_row) ** 2
    distances = input_distances(spec)
    rows = []
    for j, label in enumerate(spec.labels):
        dist = float(distances[j])
        bound = (params.variance_bound or 0.0) * params.attenuation ** (2.0 * dist)
        rows.append(VarianceNodeRow(
            label=label,
            distance=dist,
            mean_level=float(levels[j]),
            variance=float(variance[j]),
            bound=float(bound),
            passed=bool(variance[j] <= bound + tolerance),
        ))
    return VarianceReport(
        rows=rows,
        params=params,
        tolerance=tolerance,
        meta={"include_injection_sojourn": include_injection_sojourn},
    )
