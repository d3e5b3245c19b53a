"""Occupancy traces and their CSV form.

A trace is a per-node time series of mean occupancy plus optional ensemble
statistics.  All engines emit the same shape (one time column, one column
per node) so traces from different engines can be diffed cell by cell.
CSV files start with ``#`` comment lines carrying provenance and metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["OccupancyTrace", "write_trace_csv", "read_trace_csv"]

_FLOAT_FMT = ".12g"


@dataclass
class OccupancyTrace:
    times: np.ndarray
    labels: tuple[str, ...]
    mean: np.ndarray                      # shape (len(times), len(labels))
    stderr: np.ndarray | None = None
    variance: np.ndarray | None = None
    provenance: str = "analytic"
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        if self.mean.shape != (len(self.times), len(self.labels)):
            raise ValueError(
                f"mean shape {self.mean.shape} does not match "
                f"{len(self.times)} times x {len(self.labels)} nodes"
            )

    def column(self, label: str) -> np.ndarray:
        return self.mean[:, self.labels.index(label)]

    def at_times(self, times: np.ndarray) -> np.ndarray:
        """Rows of the mean matrix at the given times (must lie on the grid)."""
        times = np.asarray(times, dtype=float)
        right = np.clip(np.searchsorted(self.times, times), 0, len(self.times) - 1)
        left = np.clip(right - 1, 0, len(self.times) - 1)
        idx = np.where(np.abs(self.times[left] - times) < np.abs(self.times[right] - times),
                       left, right)
        if not np.allclose(self.times[idx], times, atol=1e-9):
            raise ValueError("requested times are not on the trace grid")
        return self.mean[idx]


def write_trace_csv(trace: OccupancyTrace, path, values: str = "mean") -> None:
    """Write one value matrix (mean or stderr) in the shared trace shape."""
    matrix = getattr(trace, values)
    if matrix is None:
        raise ValueError(f"trace has no {values!r} values")
    path = Path(path)
    lines = ["# homeostat-trace v1",
             f"# provenance={trace.provenance}",
             f"# values={values}",
             "# meta=" + json.dumps(trace.meta, sort_keys=True)]
    lines.append(",".join(["t", *trace.labels]))
    for row_t, row_v in zip(trace.times, matrix):
        cells = [format(row_t, _FLOAT_FMT)] + [format(v, _FLOAT_FMT) for v in row_v]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_trace_csv(path) -> OccupancyTrace:
    path = Path(path)
    provenance = "unknown"
    values_kind = "mean"
    meta: dict = {}
    header: list[str] | None = None
    rows: list[list[float]] = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("provenance="):
                provenance = body.split("=", 1)[1]
            elif body.startswith("values="):
                values_kind = body.split("=", 1)[1]
            elif body.startswith("meta="):
                meta = json.loads(body.split("=", 1)[1])
            continue
        if header is None:
            header = line.split(",")
            continue
        rows.append([float(cell) for cell in line.split(",")])
    if header is None or header[0] != "t":
        raise ValueError(f"{path} is not a homeostat trace CSV")
    data = np.asarray(rows, dtype=float)
    trace = OccupancyTrace(
        times=data[:, 0],
        labels=tuple(header[1:]),
        mean=data[:, 1:],
        provenance=provenance,
        meta=meta,
    )
    trace.meta.setdefault("values", values_kind)
    return trace
