"""Shared test networks and signals.

Two families of fixtures:

* the Markov standard set, used for the three-engine agreement checks
  (every travel time is exponential with the node's total rate, so the mean
  ODE engine applies);
* the general set with mixed gamma/uniform/exponential delays, used for the
  kernel-mass and spectral-consistency checks.
"""

from __future__ import annotations

import numpy as np

import homeostat as h


def node(compartment: int, molecule: int = 1) -> h.NodeId:
    return h.NodeId(compartment, molecule)


SIG_MAIN = h.AlmostPeriodicSignal(mean=2.0, terms=(h.HarmonicTerm(5.0, 0.5),))
SIG_SECOND = h.AlmostPeriodicSignal(mean=1.0, terms=(h.HarmonicTerm(3.0, 0.25),))
SIG_CONST = h.AlmostPeriodicSignal(mean=2.0)

SIGNALS = {"main": SIG_MAIN, "second": SIG_SECOND, "const": SIG_CONST}


def markov_single() -> h.MarkovRates:
    return h.MarkovRates(1, 1, (node(1),), np.zeros((1, 1)), np.array([1.0]))


def markov_chain(depth: int, jump_rates=None, exit_rate: float = 1.0) -> h.MarkovRates:
    nodes = tuple(node(i + 1) for i in range(depth + 1))
    if jump_rates is None:
        jump_rates = [1.0] * depth
    jump = np.zeros((depth + 1, depth + 1))
    for i, rate in enumerate(jump_rates):
        jump[i, i + 1] = rate
    exit_vec = np.zeros(depth + 1)
    exit_vec[depth] = exit_rate
    return h.MarkovRates(depth + 1, 1, nodes, jump, exit_vec)


def markov_loop() -> h.MarkovRates:
    nodes = (node(1), node(2))
    jump = np.array([[0.0, 1.0], [0.5, 0.0]])
    return h.MarkovRates(2, 1, nodes, jump, np.array([0.0, 0.5]))


def markov_twobytwo() -> h.MarkovRates:
    n11, n12 = h.NodeId(1, 1), h.NodeId(1, 2)
    n21, n22 = h.NodeId(2, 1), h.NodeId(2, 2)
    nodes = (n11, n12, n21, n22)
    jump = np.zeros((4, 4))
    jump[0, 1] = 1.0    # reaction in compartment 1
    jump[0, 2] = 0.5    # transport of type 1
    jump[1, 3] = 1.0    # transport of type 2
    jump[2, 3] = 0.7    # reaction in compartment 2
    jump[3, 1] = 0.4    # transport back (feedback cycle)
    exit_vec = np.array([0.25, 0.5, 0.3, 0.6])
    return h.MarkovRates(2, 2, nodes, jump, exit_vec)


def markov_standard_set():
    """(name, rates, inputs, signals) for the engine-agreement triangle."""
    return [
        ("single", markov_single(), {node(1): "main"}, SIGNALS),
        ("chain1", markov_chain(1), {node(1): "main"}, SIGNALS),
        ("chain2", markov_chain(2, [1.0, 2.0]), {node(1): "main"}, SIGNALS),
        ("chain3", markov_chain(3, [1.0, 2.0, 1.0], exit_rate=1.5), {node(1): "main"}, SIGNALS),
        ("loop", markov_loop(), {node(1): "main"}, SIGNALS),
        ("twobytwo", markov_twobytwo(),
         {h.NodeId(1, 1): "main", h.NodeId(1, 2): "second"}, SIGNALS),
    ]


def embedded_standard_set():
    """The Markov set in routing/delay form, with its signal tables."""
    out = []
    for name, rates, inputs, signals in markov_standard_set():
        spec = h.markov_to_semimarkov(rates, {n: s for n, s in inputs.items()})
        out.append((name, rates, spec, inputs, signals))
    return out


def general_chain() -> h.NetworkSpec:
    """Depth-2 chain with gamma and exponential edges and a uniform exit."""
    nodes = (node(1), node(2), node(3))
    return h.NetworkSpec(
        3, 1, nodes,
        edges=(
            h.Edge(nodes[0], nodes[1], 1.0, h.Gamma(2.0, 2.0)),
            h.Edge(nodes[1], nodes[2], 1.0, h.Exponential(1.0)),
        ),
        exits=(h.Exit(nodes[2], 1.0, h.Uniform(2.0)),),
        inputs=((nodes[0], "main"),),
    )


def general_loop() -> h.NetworkSpec:
    """Feedback loop with unit-rate exponential travel everywhere."""
    n1, n2 = node(1), node(2)
    return h.NetworkSpec(
        2, 1, (n1, n2),
        edges=(
            h.Edge(n1, n2, 1.0, h.Exponential(1.0)),
            h.Edge(n2, n1, 0.5, h.Exponential(1.0)),
        ),
        exits=(h.Exit(n2, 0.5, h.Exponential(1.0)),),
        inputs=((n1, "main"),),
    )


def general_twobytwo() -> h.NetworkSpec:
    """Two compartments, two types, mixed delay families, one feedback cycle."""
    n11, n12 = h.NodeId(1, 1), h.NodeId(1, 2)
    n21, n22 = h.NodeId(2, 1), h.NodeId(2, 2)
    nodes = (n11, n12, n21, n22)
    return h.NetworkSpec(
        2, 2, nodes,
        edges=(
            h.Edge(n11, n12, 0.6, h.Gamma(2.0, 2.0)),
            h.Edge(n11, n21, 0.3, h.Uniform(2.0)),
            h.Edge(n12, n22, 0.7, h.Exponential(1.0)),
            h.Edge(n21, n22, 0.5, h.Gamma(3.0, 2.0)),
            h.Edge(n22, n12, 0.2, h.Exponential(2.0)),
        ),
        exits=(
            h.Exit(n11, 0.1, h.Exponential(2.0)),
            h.Exit(n12, 0.3, h.Exponential(1.0)),
            h.Exit(n21, 0.5, h.Exponential(1.0)),
            h.Exit(n22, 0.8, h.Exponential(0.8)),
        ),
        inputs=((n11, "main"), (n12, "second")),
    )


def general_set():
    return [
        ("gchain", general_chain(), SIGNALS),
        ("gloop", general_loop(), SIGNALS),
        ("gmix", general_twobytwo(), SIGNALS),
    ]


def kinetics_transport_chain(depth: int = 2) -> h.KineticsSpec:
    """Compartment chain moved by unit-rate exponential transports."""
    nodes = tuple(node(i + 1) for i in range(depth + 1))
    size = depth + 1
    exit_vec = np.zeros(size)
    exit_vec[depth] = 1.0
    transport = tuple(
        h.TransportEdge(nodes[i], nodes[i + 1], rate=1.0, delay=h.Exponential(1.0))
        for i in range(depth)
    )
    return h.KineticsSpec(
        n_compartments=size, n_molecules=1, nodes=nodes,
        reaction=np.zeros((size, size)), exit=exit_vec,
        transport=transport, inputs=((nodes[0], "main"),),
    )


def rate_matched_markov(spec: h.NetworkSpec) -> h.MarkovRates:
    """Markov system with the same routing matrix and mean sojourns.

    Used as the steady-level oracle: the stationary solution of its mean
    ODEs depends only on (routing, sojourn means, input rates), which is
    exactly what the steady levels are built from.
    """
    mu = h.mean_sojourns(spec)
    P = spec.routing_matrix()
    jump = P / mu[:, None]
    exit_prob = 1.0 - P.sum(axis=1)
    exit_vec = np.maximum(exit_prob, 0.0) / mu
    return h.MarkovRates(spec.n_compartments, spec.n_molecules, spec.nodes, jump, exit_vec)


def stationary_ode_solution(rates: h.MarkovRates, mean_rates: dict) -> np.ndarray:
    """Solve the stationary mean balance 0 = A m + rate vector directly."""
    lam = np.zeros(rates.size)
    for n, value in mean_rates.items():
        lam[rates.node_index(n)] += value
    return np.linalg.solve(-rates.generator_matrix(), lam)
