"""Network data model and static analysis.

A network is a directed graph whose vertices are (compartment, molecule)
pairs.  A molecule sitting at a node picks a successor with fixed routing
probabilities (or leaves the system with the node's exit probability) and
then spends a random travel time, drawn from the chosen edge's delay
distribution, during which it is counted at the node where the decision was
made.  Inputs attach external arrival-rate signals to selected nodes.

This module owns everything static: validation, the expected-visits matrix,
mean sojourns, the steady occupancy levels that far-from-input nodes settle
to, graph distance from the input set, and the class parameters (gap,
attenuation, bound constants) used by the flatness bounds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .distributions import DelayDistribution, delay_from_json, delay_to_json
from .errors import AttenuationError, NonTransientNetworkError, SpectralGapError
from .signals import AlmostPeriodicSignal, StationaryEnvironment, signal_from_json, signal_to_json

__all__ = [
    "NodeId",
    "Edge",
    "Exit",
    "NetworkSpec",
    "SojournMixture",
    "ValidationReport",
    "ClassParameters",
    "validate",
    "fundamental_matrix",
    "spectral_radius",
    "mean_sojourn",
    "mean_sojourns",
    "steady_levels",
    "input_distance",
    "input_distances",
    "class_parameters",
    "mean_rates_from_signals",
    "network_to_json",
    "network_from_json",
]

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True, order=True)
class NodeId:
    """A network vertex: compartment index and molecule-type index (1-based)."""

    compartment: int
    molecule: int

    @property
    def label(self) -> str:
        return f"c{self.compartment}v{self.molecule}"


@dataclass(frozen=True)
class Edge:
    source: NodeId
    target: NodeId
    prob: float
    delay: DelayDistribution


@dataclass(frozen=True)
class Exit:
    node: NodeId
    prob: float
    delay: DelayDistribution


@dataclass(frozen=True)
class SojournMixture:
    """Residence-time distribution at a node.

    The residence is the travel time of whichever outgoing move the molecule
    picks, so the mixture runs over all outgoing edges and the exit, weighted
    by their routing probabilities; for a validated node it is proper.
    """

    node: NodeId
    components: tuple[tuple[float, DelayDistribution], ...]

    @property
    def total_prob(self) -> float:
        return sum(p for p, _ in self.components)

    @property
    def mean(self) -> float:
        return sum(p * d.mean for p, d in self.components)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for p, d in self.components:
            out = out + p * d.cdf(t)
        return out

    def characteristic_function(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        out = np.zeros(sigma.shape, dtype=complex)
        for p, d in self.components:
            out = out + p * d.characteristic_function(sigma)
        return out


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable network description.

    ``nodes`` is the declared vertex set (a subset of the full
    compartments-by-molecules lattice); flat indices used by all matrix
    operations follow the declaration order.  ``inputs`` pairs nodes with
    signal identifiers resolved against a separate signal table.
    """

    n_compartments: int
    n_molecules: int
    nodes: tuple[NodeId, ...]
    edges: tuple[Edge, ...] = ()
    exits: tuple[Exit, ...] = ()
    inputs: tuple[tuple[NodeId, str], ...] = ()

    def __post_init__(self) -> None:
        if self.n_compartments < 1 or self.n_molecules < 1:
            raise ValueError("network dimensions must be at least 1x1")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "exits", tuple(self.exits))
        object.__setattr__(self, "inputs", tuple((n, str(s)) for n, s in self.inputs))
        index: dict[NodeId, int] = {}
        for node in self.nodes:
            if not (1 <= node.compartment <= self.n_compartments
                    and 1 <= node.molecule <= self.n_molecules):
                raise ValueError(f"node {node.label} outside declared dimensions")
            if node in index:
                raise ValueError(f"duplicate node {node.label}")
            index[node] = len(index)
        object.__setattr__(self, "_index", index)
        for edge in self.edges:
            if edge.source not in index or edge.target not in index:
                raise ValueError(f"edge {edge.source.label}->{edge.target.label} "
                                 "references an undeclared node")
        for ex in self.exits:
            if ex.node not in index:
                raise ValueError(f"exit at undeclared node {ex.node.label}")
        for node, _ in self.inputs:
            if node not in index:
                raise ValueError(f"input at undeclared node {node.label}")

    @property
    def size(self) -> int:
        return len(self.nodes)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(node.label for node in self.nodes)

    @property
    def input_nodes(self) -> tuple[NodeId, ...]:
        return tuple(node for node, _ in self.inputs)

    def node_index(self, node: NodeId) -> int:
        return self._index[node]

    def routing_matrix(self) -> np.ndarray:
        """Node-to-node routing probabilities (exits excluded)."""
        P = np.zeros((self.size, self.size))
        for edge in self.edges:
            P[self.node_index(edge.source), self.node_index(edge.target)] += edge.prob
        return P

    def out_edges(self, node: NodeId) -> tuple[Edge, ...]:
        return tuple(e for e in self.edges if e.source == node)

    def sojourn(self, node: NodeId) -> SojournMixture:
        components = [(e.prob, e.delay) for e in self.edges if e.source == node]
        components += [(x.prob, x.delay) for x in self.exits if x.node == node]
        return SojournMixture(node=node, components=tuple(components))


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...]
    warnings: tuple[str, ...]
    row_sums: dict = field(default_factory=dict)
    spectral_radius: float = float("nan")

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "row_sums": dict(self.row_sums),
            "spectral_radius": self.spectral_radius,
        }


def spectral_radius(matrix: np.ndarray) -> float:
    if matrix.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def validate(spec: NetworkSpec) -> ValidationReport:
    """Check routing stochasticity, transience and input reachability.

    Report-style: problems are collected rather than raised, so a driver can
    show all of them at once.  Callers treat any error entry as fatal.
    """
    errors: list[str] = []
    warnings: list[str] = []

    for edge in spec.edges:
        if not 0.0 < edge.prob <= 1.0:
            errors.append(f"edge {edge.source.label}->{edge.target.label} "
                          f"has probability {edge.prob} outside (0, 1]")
    for ex in spec.exits:
        if not 0.0 < ex.prob <= 1.0:
            errors.append(f"exit at {ex.node.label} has probability {ex.prob} outside (0, 1]")
    seen_pairs = set()
    for edge in spec.edges:
        pair = (edge.source, edge.target)
        if pair in seen_pairs:
            errors.append(f"duplicate edge {edge.source.label}->{edge.target.label}")
        seen_pairs.add(pair)

    row_sums = {}
    for node in spec.nodes:
        total = sum(e.prob for e in spec.edges if e.source == node)
        total += sum(x.prob for x in spec.exits if x.node == node)
        row_sums[node.label] = total
        if abs(total - 1.0) > ROW_SUM_TOL:
            errors.append(f"outgoing probabilities at {node.label} sum to {total!r}, not 1")

    radius = spectral_radius(spec.routing_matrix())
    if not radius < 1.0 - 1e-12:
        errors.append(f"routing matrix spectral radius {radius:.6g} is not below 1; "
                      "molecules would circulate forever")

    # every supported family damps oscillations on any positive band
    for e in spec.edges:
        if not e.delay.abs_cf_sup(1.0) < 1.0:
            errors.append(f"delay on {e.source.label}->{e.target.label} "
                          "does not attenuate oscillations")

    if spec.inputs:
        dist = input_distances(spec)
        for node in spec.nodes:
            if math.isinf(dist[spec.node_index(node)]):
                warnings.append(f"node {node.label} is unreachable from the input set")
    else:
        warnings.append("network declares no input nodes")

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings),
                            row_sums=row_sums, spectral_radius=radius)


def fundamental_matrix(spec: NetworkSpec) -> np.ndarray:
    """Expected visit counts B[i, j] = sum over path lengths n >= 1 of the
    n-step routing probabilities, i.e. (I - P)^-1 P."""
    P = spec.routing_matrix()
    eye = np.eye(spec.size)
    try:
        B = np.linalg.solve(eye - P, P)
    except np.linalg.LinAlgError as exc:
        raise NonTransientNetworkError(
            f"I - P is singular (spectral radius {spectral_radius(P):.6g}); "
            "expected visit counts diverge"
        ) from exc
    if spectral_radius(P) >= 1.0:
        raise NonTransientNetworkError(
            f"routing matrix spectral radius {spectral_radius(P):.6g} is not below 1"
        )
    # the Neumann series is entrywise non-negative; scrub solver noise
    B[(B < 0) & (B > -1e-12)] = 0.0
    return B


def mean_sojourn(spec: NetworkSpec, node: NodeId) -> float:
    return spec.sojourn(node).mean


def mean_sojourns(spec: NetworkSpec) -> np.ndarray:
    return np.array([spec.sojourn(node).mean for node in spec.nodes])


def mean_rates_from_signals(spec: NetworkSpec, signals: Mapping[str, object]) -> dict[NodeId, float]:
    """Long-run mean arrival rate per input node."""
    rates: dict[NodeId, float] = {}
    for node, signal_id in spec.inputs:
        signal = signals[signal_id]
        rates[node] = rates.get(node, 0.0) + float(signal.mean)
    return rates


def steady_levels(spec: NetworkSpec, mean_rates: Mapping[NodeId, float]) -> np.ndarray:
    """Steady occupancy level of each node: sum over inputs of
    mean rate * expected visits * mean sojourn."""
    B = fundamental_matrix(spec)
    mu = mean_sojourns(spec)
    levels = np.zeros(spec.size)
    for node, rate in mean_rates.items():
        levels += rate * B[spec.node_index(node), :] * mu
    return levels


def input_distances(spec: NetworkSpec) -> np.ndarray:
    """Directed-edge-count distance from the input set (inf if unreachable)."""
    dist = np.full(spec.size, np.inf)
    queue: list[int] = []
    for node in set(spec.input_nodes):
        idx = spec.node_index(node)
        dist[idx] = 0.0
        queue.append(idx)
    successors: dict[int, list[int]] = {}
    for edge in spec.edges:
        successors.setdefault(spec.node_index(edge.source), []).append(spec.node_index(edge.target))
    head = 0
    while head < len(queue):
        cur = queue[head]
        head += 1
        for nxt in successors.get(cur, ()):
            if dist[nxt] == np.inf:
                dist[nxt] = dist[cur] + 1.0
                queue.append(nxt)
    return dist


def input_distance(spec: NetworkSpec, node: NodeId) -> float:
    return float(input_distances(spec)[spec.node_index(node)])


@dataclass(frozen=True)
class ClassParameters:
    """Constants that drive the flatness bounds.

    ``attenuation`` is the worst per-hop damping of any oscillation with
    frequency at least ``gap``.  ``coeff_sum_osc`` sums |c_k| over the
    oscillatory input coefficients only and feeds ``deviation_bound``;
    ``coeff_sum_total`` additionally counts the means and is reported for
    reference.  For stationary inputs ``variance_sum`` is the total input
    variance and feeds ``variance_bound``.
    """

    gap: float
    attenuation: float
    coeff_sum_osc: float
    coeff_sum_total: float
    deviation_bound: float
    variance_sum: float | None = None
    variance_bound: float | None = None

    def to_dict(self) -> dict:
        return {
            "gap": self.gap,
            "attenuation": self.attenuation,
            "coeff_sum_osc": self.coeff_sum_osc,
            "coeff_sum_total": self.coeff_sum_total,
            "deviation_bound": self.deviation_bound,
            "variance_sum": self.variance_sum,
            "variance_bound": self.variance_bound,
        }


def class_parameters(spec: NetworkSpec, signals: Mapping[str, object], gap: float) -> ClassParameters:
    """Compute (attenuation, coefficient sums, bound constants) for the gap.

    Raises :class:`SpectralGapError` if any input carries energy at a nonzero
    frequency below the gap, and :class:`AttenuationError` if no damping
    factor below one exists.
    """
    if not gap > 0:
        raise ValueError(f"gap must be positive, got {gap}")

    coeff_osc = 0.0
    coeff_total = 0.0
    variance_sum = 0.0
    any_env = False
    for node, signal_id in spec.inputs:
        signal = signals[signal_id]
        if isinstance(signal, AlmostPeriodicSignal):
            for term in signal.terms:
                if term.frequency < gap:
                    raise SpectralGapError(
                        f"signal {signal_id!r} at {node.label} has a term at "
                        f"frequency {term.frequency:g} inside the gap (0, {gap:g})"
                    )
            coeff_osc += signal.coefficient_sum
            coeff_total += signal.mean + signal.coefficient_sum
        elif isinstance(signal, StationaryEnvironment):
            any_env = True
            for freq, amp in signal.harmonics:
                if freq < gap:
                    raise SpectralGapError(
                        f"environment {signal_id!r} at {node.label} has an atom at "
                        f"frequency {freq:g} inside the gap (0, {gap:g})"
                    )
            coeff_osc += sum(amp for _, amp in signal.harmonics)
            coeff_total += signal.mean + sum(amp for _, amp in signal.harmonics)
            variance_sum += signal.variance
        else:
            raise TypeError(f"unsupported signal {signal!r}")

    attenuation = 0.0
    for edge in spec.edges:
        attenuation = max(attenuation, edge.delay.abs_cf_sup(gap))
    if spec.edges and not attenuation < 1.0:
        raise AttenuationError(
            f"per-hop attenuation is {attenuation:.6g} at gap {gap:g}; no damping below 1"
        )

    denom = gap * (1.0 - attenuation)
    deviation_bound = 2.0 * coeff_osc / denom if denom > 0 else math.inf
    variance_bound = (2.0 / denom) ** 2 * variance_sum if any_env else None
    return ClassParameters(
        gap=gap,
        attenuation=attenuation,
        coeff_sum_osc=coeff_osc,
        coeff_sum_total=coeff_total,
        deviation_bound=deviation_bound,
        variance_sum=variance_sum if any_env else None,
        variance_bound=variance_bound,
    )


# ---------------------------------------------------------------------------
# JSON serialization (spec_version 1)

def _node_to_json(node: NodeId) -> dict:
    return {"compartment": node.compartment, "type": node.molecule}


def _node_from_json(doc: dict) -> NodeId:
    return NodeId(compartment=int(doc["compartment"]), molecule=int(doc["type"]))


def network_to_json(spec: NetworkSpec) -> dict:
    return {
        "spec_version": 1,
        "dimensions": {"compartments": spec.n_compartments, "types": spec.n_molecules},
        "nodes": [_node_to_json(n) for n in spec.nodes],
        "edges": [
            {"from": _node_to_json(e.source), "to": _node_to_json(e.target),
             "prob": e.prob, "delay": delay_to_json(e.delay)}
            for e in spec.edges
        ],
        "exits": [
            {"node": _node_to_json(x.node), "prob": x.prob, "delay": delay_to_json(x.delay)}
            for x in spec.exits
        ],
        "inputs": [
            {"node": _node_to_json(n), "signal": s} for n, s in spec.inputs
        ],
    }


def network_from_json(doc: dict) -> NetworkSpec:
    version = doc.get("spec_version")
    if version != 1:
        raise ValueError(f"unsupported spec_version {version!r}")
    dims = doc["dimensions"]
    return NetworkSpec(
        n_compartments=int(dims["compartments"]),
        n_molecules=int(dims["types"]),
        nodes=tuple(_node_from_json(n) for n in doc["nodes"]),
        edges=tuple(
            Edge(source=_node_from_json(e["from"]), target=_node_from_json(e["to"]),
                 prob=float(e["prob"]), delay=delay_from_json(e["delay"]))
            for e in doc.get("edges", [])
        ),
        exits=tuple(
            Exit(node=_node_from_json(x["node"]), prob=float(x["prob"]),
                 delay=delay_from_json(x["delay"]))
            for x in doc.get("exits", [])
        ),
        inputs=tuple(
            (_node_from_json(i["node"]), str(i["signal"])) for i in doc.get("inputs", [])
        ),
    )


def signals_to_json(signals: Mapping[str, object]) -> dict:
    return {key: signal_to_json(sig) for key, sig in signals.items()}


def signals_from_json(doc: Mapping[str, dict]) -> dict[str, object]:
    return {key: signal_from_json(sig) for key, sig in doc.items()}


def network_to_json_str(spec: NetworkSpec) -> str:
    return json.dumps(network_to_json(spec), sort_keys=True, indent=2)
