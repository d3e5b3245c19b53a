"""Experiment configuration and orchestration.

An experiment config is a JSON document bundling a network (routing/delay
form, or kinetics form with rate and transport sections), a signal table, the
frequency gap, grid and simulation parameters, the engine list and a master
seed.  ``run_experiment`` drives the requested engines and writes traces
(CSV), reports (JSON) and figures (PNG) into an output directory; every file
carries the config hash and seed so a run can be reproduced byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import figures
from .analytic import (
    homeostasis_report,
    spectral_response,
    transient_mean,
    transition_kernel,
    variance_response,
)
from .errors import HomeostatError
from .grids import TimeGrid
from .kinetics import (
    KineticsSpec,
    delay_kinetics,
    embed_transit_nodes,
    kinetics_from_json,
)
from .network import NetworkSpec, network_from_json, validate
from .signals import StationaryEnvironment, signal_from_json
from .simulate import SimConfig, environment_ensemble, simulate
from .traces import OccupancyTrace, write_trace_csv

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_experiment",
    "config_hash",
    "run_experiment",
    "run_sweep",
    "compare_traces",
    "build_chain",
]


class ConfigError(HomeostatError):
    """The experiment configuration is unusable."""


@dataclass
class ExperimentConfig:
    raw: dict
    network: NetworkSpec
    kinetics: KineticsSpec | None
    signals: dict
    gap: float
    grid: TimeGrid
    engines: tuple[str, ...]
    seed: int
    replications: int = 2000
    sample_count: int = 26
    env_replications: int = 1000
    include_injection_sojourn: bool = True
    output: str | None = None
    sweep: dict = field(default_factory=dict)

    @property
    def hash(self) -> str:
        return config_hash(self.raw)


def config_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


_KNOWN_ENGINES = ("analytic", "simulate", "kinetics", "spectrum")


def parse_experiment(doc: dict) -> ExperimentConfig:
    """Build the runtime config from a parsed JSON document."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")

    try:
        signals = {key: signal_from_json(sig) for key, sig in doc.get("signals", {}).items()}
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad signal table: {exc}") from exc

    kinetics = None
    if "kinetics" in doc and "network" in doc:
        raise ConfigError("config has both 'network' and 'kinetics' sections; "
                          "a kinetics model brings its own embedded network")
    if "kinetics" in doc:
        try:
            kinetics = kinetics_from_json(doc["kinetics"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad kinetics section: {exc}") from exc
        network = embed_transit_nodes(kinetics).network
    elif "network" in doc:
        try:
            network = network_from_json(doc["network"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad network section: {exc}") from exc
    elif "sweep" in doc:
        network = None
    else:
        raise ConfigError("config needs a 'network' or 'kinetics' section")

    engines = tuple(doc.get("engines", ["analytic"]))
    for engine in engines:
        if engine not in _KNOWN_ENGINES:
            raise ConfigError(f"unknown engine {engine!r}; choose from {_KNOWN_ENGINES}")
    if not engines and "sweep" not in doc:
        raise ConfigError("engine list is empty")
    if "kinetics" in engines and kinetics is None:
        raise ConfigError("the kinetics engine needs a 'kinetics' section")

    if network is not None:
        for node, signal_id in network.inputs:
            if signal_id not in signals:
                raise ConfigError(f"input at {node.label} references unknown signal {signal_id!r}")

    grid_doc = doc.get("grid", {})
    try:
        grid = TimeGrid(dt=float(grid_doc.get("dt", 0.01)),
                        horizon=float(grid_doc.get("horizon", 10.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid section: {exc}") from exc

    sim_doc = doc.get("sim", {})
    seed = doc.get("seed")
    if seed is None and ("simulate" in engines):
        raise ConfigError("a master seed is required when the simulate engine runs")

    gap = float(doc.get("gap", 1.0))
    if not gap > 0:
        raise ConfigError(f"gap must be positive, got {gap}")

    return ExperimentConfig(
        raw=doc,
        network=network,
        kinetics=kinetics,
        signals=signals,
        gap=gap,
        grid=grid,
        engines=engines,
        seed=int(seed) if seed is not None else 0,
        replications=int(sim_doc.get("replications", 2000)),
        sample_count=int(sim_doc.get("sample_count", 26)),
        env_replications=int(sim_doc.get("env_replications", 1000)),
        include_injection_sojourn=bool(doc.get("include_injection_sojourn", True)),
        output=doc.get("output"),
        sweep=doc.get("sweep", {}),
    )


def load_experiment(path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_experiment(doc)


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, doc: dict) -> None:
    _write_text(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


def _sample_times(config: ExperimentConfig) -> np.ndarray:
    """Simulation sample grid: a subset of the analytic grid."""
    n_cells = config.grid.n - 1
    stride = max(n_cells // max(config.sample_count - 1, 1), 1)
    idx = np.arange(0, n_cells + 1, stride)
    return config.grid.times[idx]


def compare_traces(
    a: OccupancyTrace,
    b: OccupancyTrace,
    stderr: np.ndarray | None = None,
) -> dict:
    """Cell-by-cell agreement statistics between two traces.

    Traces must share times and labels.  With a standard-error matrix the
    fraction of cells within two standard errors is reported as well.
    """
    if list(a.labels) != list(b.labels):
        raise ValueError("traces cover different node sets")
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, atol=1e-9):
        raise ValueError("traces use different time grids")
    diff = np.abs(a.mean - b.mean)
    scale = max(float(np.abs(a.mean).max()), float(np.abs(b.mean).max()))
    stats = {
        "cells": int(diff.size),
        "max_abs_diff": float(diff.max()),
        "max_rel_diff": float(diff.max() / scale) if scale > 0 else 0.0,
    }
    if stderr is not None:
        within = diff <= 2.0 * stderr
        stats["within_2se_fraction"] = float(np.mean(within))
    return stats


def _spectrum_rows(network: NetworkSpec, signals: Mapping[str, object],
                   flag: bool) -> list[tuple[float, str, str, complex]]:
    freqs: list[float] = []
    for _, signal_id in network.inputs:
        signal = signals[signal_id]
        if isinstance(signal, StationaryEnvironment):
            freqs.extend(f for f, _ in signal.harmonics)
        else:
            freqs.extend(signal.frequencies)
    rows = []
    for sigma in sorted(set(freqs)):
        matrix = spectral_response(network, sigma, flag).matrix
        for node, _ in network.inputs:
            i = network.node_index(node)
            for j, label in enumerate(network.labels):
                rows.append((sigma, node.label, label, matrix[i, j]))
    return rows


def run_experiment(config: ExperimentConfig, outdir, render_figures: bool = True) -> dict:
    """Run the requested engines and write all outputs into ``outdir``.

    Returns a manifest mapping output names to file paths.  Raises
    :class:`ConfigError` for an invalid network and lets engine errors
    propagate.
    """
    if config.network is None:
        raise ConfigError("config has no network to run")
    report = validate(config.network)
    if not report.ok:
        raise ConfigError("invalid network: " + "; ".join(report.errors))

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stamp = {"config_hash": config.hash, "seed": config.seed}
    manifest: dict[str, str] = {}
    traces: list[OccupancyTrace] = []
    flag = config.include_injection_sojourn
    network = config.network
    signals = config.signals

    all_stationary = bool(network.inputs) and all(
        isinstance(signals[sid], StationaryEnvironment) for _, sid in network.inputs
    )

    analytic_trace = None
    sim_trace = None

    if "analytic" in config.engines:
        kernel = transition_kernel(network, config.grid, include_injection_sojourn=flag)
        resolved = {
            key: sig.realize() if isinstance(sig, StationaryEnvironment) else sig
            for key, sig in signals.items()
        }
        analytic_trace = transient_mean(network, kernel, resolved)
        analytic_trace.meta.update(stamp)
        path = outdir / "trace_analytic.csv"
        write_trace_csv(analytic_trace, path)
        manifest["trace_analytic"] = str(path)
        traces.append(analytic_trace)

        hom = homeostasis_report(network, signals, config.gap)
        doc = hom.to_dict()
        doc["meta"].update(stamp)
        hom_path = outdir / "homeostasis_report.json"
        _write_json(hom_path, doc)
        manifest["homeostasis_report"] = str(hom_path)
        if render_figures:
            fig_path = outdir / "homeostasis.png"
            figures.plot_homeostasis(hom, fig_path)
            manifest["homeostasis_figure"] = str(fig_path)

        if all_stationary:
            var_report = variance_response(network, signals, config.gap,
                                           include_injection_sojourn=flag)
            var_doc = var_report.to_dict()
            var_doc["meta"].update(stamp)
            ens = environment_ensemble(
                network, signals,
                SimConfig(horizon=config.grid.horizon, replications=1,
                          seed=config.seed, env_replications=config.env_replications),
                include_injection_sojourn=flag,
            )
            var_doc["ensemble"] = ens.to_dict()
            var_path = outdir / "variance_report.json"
            _write_json(var_path, var_doc)
            manifest["variance_report"] = str(var_path)

    if "simulate" in config.engines:
        sim_config = SimConfig(
            horizon=config.grid.horizon,
            replications=config.replications,
            seed=config.seed,
            sample_times=_sample_times(config),
            env_replications=config.env_replications,
            include_injection_sojourn=flag,
        )
        sim_trace = simulate(network, signals, sim_config)
        sim_trace.meta.update(stamp)
        mean_path = outdir / "trace_simulate.csv"
        se_path = outdir / "trace_simulate_se.csv"
        write_trace_csv(sim_trace, mean_path)
        write_trace_csv(sim_trace, se_path, values="stderr")
        _write_json(outdir / "simulate_summary.json", {
            "replications": config.replications,
            "seed": config.seed,
            "horizon": config.grid.horizon,
            "max_stderr": float(sim_trace.stderr.max()),
            **stamp,
        })
        manifest["trace_simulate"] = str(mean_path)
        manifest["trace_simulate_se"] = str(se_path)
        manifest["simulate_summary"] = str(outdir / "simulate_summary.json")
        traces.append(sim_trace)

    if "kinetics" in config.engines:
        kin_trace = delay_kinetics(config.kinetics, signals, config.grid)
        kin_trace.meta.update(stamp)
        path = outdir / "trace_kinetics.csv"
        write_trace_csv(kin_trace, path)
        manifest["trace_kinetics"] = str(path)
        traces.append(kin_trace)

    if "spectrum" in config.engines:
        rows = _spectrum_rows(network, signals, flag)
        lines = ["# homeostat-spectrum v1",
                 "# meta=" + json.dumps(stamp, sort_keys=True),
                 "sigma,source,node,re,im,abs"]
        for sigma, source, label, value in rows:
            lines.append(
                f"{sigma:.12g},{source},{label},{value.real:.12g},"
                f"{value.imag:.12g},{abs(value):.12g}"
            )
        path = outdir / "spectrum.csv"
        _write_text(path, "\n".join(lines) + "\n")
        manifest["spectrum"] = str(path)

    if analytic_trace is not None and sim_trace is not None:
        stats = compare_traces(
            OccupancyTrace(times=sim_trace.times, labels=analytic_trace.labels,
                           mean=analytic_trace.at_times(sim_trace.times),
                           provenance="analytic"),
            sim_trace,
            stderr=sim_trace.stderr,
        )
        stats.update(stamp)
        path = outdir / "compare.json"
        _write_json(path, stats)
        manifest["compare"] = str(path)

    if render_figures and traces:
        fig_path = outdir / "traces.png"
        figures.plot_traces(traces, fig_path)
        manifest["traces_figure"] = str(fig_path)

    relative = {name: Path(path).name for name, path in manifest.items()}
    _write_json(outdir / "manifest.json", {"outputs": relative, **stamp})
    return manifest


def build_chain(depth: int, edge_delay, exit_delay, signal_id: str = "input") -> NetworkSpec:
    """Single-path chain: the input node feeds ``depth`` hops downstream."""
    from .network import Edge, Exit, NodeId

    nodes = tuple(NodeId(compartment=i + 1, molecule=1) for i in range(depth + 1))
    edges = tuple(
        Edge(source=nodes[i], target=nodes[i + 1], prob=1.0, delay=edge_delay)
        for i in range(depth)
    )
    exits = (Exit(node=nodes[-1], prob=1.0, delay=exit_delay),)
    return NetworkSpec(
        n_compartments=depth + 1,
        n_molecules=1,
        nodes=nodes,
        edges=edges,
        exits=exits,
        inputs=((nodes[0], signal_id),),
    )


def run_sweep(config: ExperimentConfig, outdir, depths: Sequence[int] | None = None,
              render_figures: bool = True) -> dict:
    """Depth sweep over chain networks: deviation decay vs the bound.

    The config's ``sweep`` section provides the chain template (edge delay,
    exit delay, input signal).  For each depth the supremum deviation of the
    deepest node, its bound and the closed-form response amplitude are
    recorded; the fitted slope of log deviation against depth is reported.
    """
    from .distributions import delay_from_json

    sweep_doc = config.sweep
    if not sweep_doc:
        raise ConfigError("config has no 'sweep' section")
    try:
        edge_delay = delay_from_json(sweep_doc["edge_delay"])
        exit_delay = delay_from_json(sweep_doc["exit_delay"])
        signal_id = sweep_doc.get("signal", "input")
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad sweep section: {exc}") from exc
    if signal_id not in config.signals:
        raise ConfigError(f"sweep references unknown signal {signal_id!r}")
    if depths is None:
        lo, hi = sweep_doc.get("depths", [1, 6])
        depths = range(int(lo), int(hi) + 1)
    depths = [int(d) for d in depths]
    if not depths:
        raise ConfigError("sweep depth range is empty")

    signal = config.signals[signal_id]
    if isinstance(signal, StationaryEnvironment):
        signal = signal.realize()
    rows = []
    for depth in depths:
        chain = build_chain(depth, edge_delay, exit_delay, signal_id)
        report = homeostasis_report(chain, {signal_id: signal}, config.gap)
        deepest = report.rows[-1]
        amplitude = 0.0
        source = chain.nodes[0]
        for term in signal.terms:
            g = spectral_response(chain, term.frequency, False).matrix
            amplitude += 2.0 * abs(term.coefficient) * abs(
                g[chain.node_index(source), chain.size - 1]
            )
        rows.append({
            "depth": depth,
            "sup_deviation": deepest.sup_deviation,
            "bound": deepest.bound,
            "response_amplitude": amplitude,
        })
        params = report.params

    positives = [(r["depth"], r["sup_deviation"]) for r in rows if r["sup_deviation"] > 0]
    if len(positives) >= 2:
        xs = np.array([d for d, _ in positives], dtype=float)
        ys = np.log([v for _, v in positives])
        slope = float(np.polyfit(xs, ys, 1)[0])
    else:
        slope = math.nan

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stamp = {"config_hash": config.hash, "seed": config.seed}
    lines = ["# homeostat-sweep v1",
             "# meta=" + json.dumps(stamp, sort_keys=True),
             "depth,sup_deviation,bound,response_amplitude"]
    for r in rows:
        lines.append(f"{r['depth']},{r['sup_deviation']:.12g},"
                     f"{r['bound']:.12g},{r['response_amplitude']:.12g}")
    _write_text(outdir / "sweep.csv", "\n".join(lines) + "\n")
    doc = {
        "rows": rows,
        "fitted_log_slope": slope,
        "log_attenuation": math.log(params.attenuation) if params.attenuation > 0 else None,
        "params": params.to_dict(),
        **stamp,
    }
    _write_json(outdir / "sweep.json", doc)
    manifest = {"sweep_csv": str(outdir / "sweep.csv"), "sweep_json": str(outdir / "sweep.json")}
    if render_figures:
        figures.plot_sweep(
            [r["depth"] for r in rows],
            [r["sup_deviation"] for r in rows],
            [r["bound"] for r in rows],
            slope,
            outdir / "sweep.png",
        )
        manifest["sweep_figure"] = str(outdir / "sweep.png")
    return manifest
