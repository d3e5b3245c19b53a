"""Figure rendering for the report paths.

Each CLI report that writes delimited output also renders a PNG next to it:
occupancy traces, the per-node flatness chart, and the depth-decay sweep.
Rendering uses the Agg backend so runs stay headless and reproducible.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["plot_traces", "plot_homeostasis", "plot_sweep"]


def plot_traces(traces, path) -> None:
    """Overlay mean-occupancy traces; simulated traces get error bars."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for trace in traces:
        style = {"analytic": "-", "kinetics": "--"}.get(trace.provenance, "")
        for j, label in enumerate(trace.labels):
            color = colors[j % len(colors)]
            name = f"{label} ({trace.provenance})"
            if trace.provenance == "simulated":
                err = None if trace.stderr is None else 2.0 * trace.stderr[:, j]
                ax.errorbar(trace.times, trace.mean[:, j], yerr=err, fmt=".",
                            ms=3, color=color, alpha=0.6, label=name)
            else:
                ax.plot(trace.times, trace.mean[:, j], style, color=color, label=name)
    ax.set_xlabel("time")
    ax.set_ylabel("mean occupancy")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def plot_homeostasis(report, path) -> None:
    """Per-node supremum deviation against the decay bound, log scale."""
    rows = [r for r in report.rows if np.isfinite(r.distance)]
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    x = np.arange(len(rows))
    dev = np.array([max(r.sup_deviation, 1e-300) for r in rows])
    bound = np.array([max(r.bound, 1e-300) for r in rows])
    ax.bar(x - 0.2, dev, width=0.4, label="sup deviation")
    ax.bar(x + 0.2, bound, width=0.4, label="bound")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels([f"{r.label}\nd={int(r.distance)}" for r in rows], fontsize=8)
    ax.set_ylabel("deviation from steady level")
    ax.legend()
    positive = np.concatenate([dev[dev > 1e-200], bound[bound > 1e-200]])
    if len(positive):
        ax.set_ylim(bottom=positive.min() * 0.1)
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)


def plot_sweep(depths, deviations, bounds, slope, path) -> None:
    """Depth-decay sweep: measured deviation, bound and fitted decay line."""
    depths = np.asarray(depths, dtype=float)
    deviations = np.asarray(deviations, dtype=float)
    bounds = np.asarray(bounds, dtype=float)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy(depths, deviations, "o-", label="sup deviation")
    ax.semilogy(depths, bounds, "s--", label="bound")
    if len(depths) > 1 and np.all(deviations > 0):
        anchor = np.log(deviations[0])
        ax.semilogy(depths, np.exp(anchor + slope * (depths - depths[0])), ":",
                    label=f"fit slope {slope:.3f}")
    ax.set_xlabel("depth")
    ax.set_ylabel("deviation")
    ax.legend()
    fig.tight_layout()
    fig.savefig(Path(path), dpi=150)
    plt.close(fig)
