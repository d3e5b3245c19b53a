"""Regenerate the golden outputs for the shipped example configs.

Run from the repository root:  python tools/regen_golden.py
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from homeostat.experiment import load_experiment, run_experiment, run_sweep

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "golden"

CASES = {
    "chain": ("configs/chain.json", ["homeostasis_report.json"]),
    "loop": ("configs/loop.json", ["homeostasis_report.json"]),
    "kinetics_chain": ("configs/kinetics_chain.json", ["homeostasis_report.json"]),
}


def main() -> None:
    for name, (config_path, outputs) in CASES.items():
        config = load_experiment(ROOT / config_path)
        with tempfile.TemporaryDirectory() as tmp:
            run_experiment(config, tmp, render_figures=False)
            dest = GOLDEN / name
            dest.mkdir(parents=True, exist_ok=True)
            for output in outputs:
                shutil.copy(Path(tmp) / output, dest / output)
                print(f"wrote {dest / output}")
    config = load_experiment(ROOT / "configs" / "sweep_chain.json")
    with tempfile.TemporaryDirectory() as tmp:
        run_sweep(config, tmp, render_figures=False)
        dest = GOLDEN / "sweep_chain"
        dest.mkdir(parents=True, exist_ok=True)
        shutil.copy(Path(tmp) / "sweep.json", dest / "sweep.json")
        print(f"wrote {dest / 'sweep.json'}")


if __name__ == "__main__":
    main()
