"""Command-line interface.

Subcommands:

* ``validate`` - check a config and print the validation report and class
  parameters; exit 0 only if everything passes.
* ``run`` - execute the configured engines and write traces, reports and
  figures into the output directory.
* ``sweep`` - chain-depth decay sweep from a chain template config.
* ``compare`` - agreement statistics between two trace CSVs, with an
  optional acceptance gate.

Exit codes: 0 ok, 2 invalid config, 3 engine failure, 4 gate failure in
compare mode.  ``--threads`` (or HOMEOSTAT_THREADS) is accepted for
interface stability; engines run deterministically and produce identical
output for every value.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import HomeostatError
from .experiment import (
    ConfigError,
    compare_traces,
    load_experiment,
    run_experiment,
    run_sweep,
)
from .network import class_parameters, validate
from .traces import read_trace_csv

EXIT_OK = 0
EXIT_INVALID_CONFIG = 2
EXIT_ENGINE_FAILURE = 3
EXIT_GATE_FAILURE = 4


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the master seed")
    parser.add_argument("--engines", default=None,
                        help="comma-separated engine list override")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("HOMEOSTAT_THREADS", "0")),
                        help="worker count (0 = auto); results are identical for any value")
    figs = parser.add_mutually_exclusive_group()
    figs.add_argument("--figures", dest="figures", action="store_true", default=True,
                      help="render PNG figures next to the delimited output (default)")
    figs.add_argument("--no-figures", dest="figures", action="store_false",
                      help="skip figure rendering")


def _load(args) -> "ExperimentConfig":
    config = load_experiment(args.config)
    if args.seed is not None:
        config.seed = args.seed
        config.raw = dict(config.raw, seed=args.seed)
    if getattr(args, "engines", None):
        engines = tuple(e.strip() for e in args.engines.split(",") if e.strip())
        config.engines = engines
        config.raw = dict(config.raw, engines=list(engines))
    return config


def cmd_validate(args) -> int:
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    if config.network is None:
        print("config error: nothing to validate (no network or kinetics section)",
              file=sys.stderr)
        return EXIT_INVALID_CONFIG
    report = validate(config.network)
    for message in report.errors:
        print(f"error: {message}")
    for message in report.warnings:
        print(f"warning: {message}")
    print(f"spectral_radius: {report.spectral_radius:.6g}")
    if not report.ok:
        return EXIT_INVALID_CONFIG
    try:
        params = class_parameters(config.network, config.signals, config.gap)
    except HomeostatError as exc:
        print(f"error: {exc}")
        return EXIT_INVALID_CONFIG
    print(f"gap: {params.gap:.6g}")
    print(f"attenuation: {params.attenuation:.6g}")
    print(f"coeff_sum_osc: {params.coeff_sum_osc:.6g}")
    print(f"coeff_sum_total: {params.coeff_sum_total:.6g}")
    print(f"deviation_bound: {params.deviation_bound:.6g}")
    if params.variance_bound is not None:
        print(f"variance_bound: {params.variance_bound:.6g}")
    print("ok")
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    outdir = args.out or config.output or "out"
    try:
        manifest = run_experiment(config, outdir, render_figures=args.figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except HomeostatError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE_FAILURE
    for name, path in sorted(manifest.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    depths = None
    if args.depths:
        try:
            lo, hi = args.depths.split(":")
            depths = range(int(lo), int(hi) + 1)
        except ValueError:
            print(f"bad --depths {args.depths!r}; expected LO:HI", file=sys.stderr)
            return EXIT_INVALID_CONFIG
    outdir = args.out or config.output or "out"
    try:
        manifest = run_sweep(config, outdir, depths=depths, render_figures=args.figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    except HomeostatError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return EXIT_ENGINE_FAILURE
    for name, path in sorted(manifest.items()):
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        trace_a = read_trace_csv(args.trace_a)
        trace_b = read_trace_csv(args.trace_b)
        stderr = None
        if args.se:
            stderr = read_trace_csv(args.se).mean
        else:
            sibling = Path(args.trace_b).with_name(
                Path(args.trace_b).stem + "_se" + Path(args.trace_b).suffix)
            if sibling.exists():
                stderr = read_trace_csv(sibling).mean
        stats = compare_traces(trace_a, trace_b, stderr=stderr)
    except (OSError, ValueError) as exc:
        print(f"compare error: {exc}", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    text = json.dumps(stats, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    if args.gate is not None:
        fraction = stats.get("within_2se_fraction")
        if fraction is None:
            print("gate error: no standard errors available", file=sys.stderr)
            return EXIT_GATE_FAILURE
        if fraction < args.gate:
            print(f"gate failure: {fraction:.4f} < {args.gate:.4f}", file=sys.stderr)
            return EXIT_GATE_FAILURE
    if args.rel_tol is not None and stats["max_rel_diff"] > args.rel_tol:
        print(f"gate failure: max_rel_diff {stats['max_rel_diff']:.3g} > {args.rel_tol:.3g}",
              file=sys.stderr)
        return EXIT_GATE_FAILURE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="homeostat", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="validate a config")
    _add_common(p_validate)
    p_validate.set_defaults(func=cmd_validate)

    p_run = sub.add_parser("run", help="run the configured engines")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="chain-depth decay sweep")
    _add_common(p_sweep)
    p_sweep.add_argument("--depths", default=None, help="depth range LO:HI")
    p_sweep.set_defaults(func=cmd_sweep)

    p_compare = sub.add_parser("compare", help="compare two trace CSVs")
    p_compare.add_argument("trace_a")
    p_compare.add_argument("trace_b")
    p_compare.add_argument("--se", default=None,
                           help="standard-error CSV for trace_b (default: sibling *_se.csv)")
    p_compare.add_argument("--gate", type=float, default=None,
                           help="minimum within-2-standard-errors fraction")
    p_compare.add_argument("--rel-tol", type=float, default=None,
                           help="maximum allowed relative difference")
    p_compare.add_argument("--out", default=None, help="write the stats JSON here")
    p_compare.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    np.seterr(over="raise")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
