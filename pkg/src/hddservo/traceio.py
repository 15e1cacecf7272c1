"""CSV serialization of simulation traces (round-trip exact)."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .servo import TRACE_COLUMNS, SimulationTrace


def header(n_params: int) -> list:
    return list(TRACE_COLUMNS) + [f"theta_{i}" for i in range(1, n_params + 1)]


def _fmt(x: float) -> str:
    return "%.17g" % x


def emit_trace(trace: SimulationTrace, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = [trace[c] for c in TRACE_COLUMNS[1:]]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header(trace.n_params))
        for i in range(len(trace)):
            row = [str(int(trace["k"][i]))]
            row += [_fmt(c[i]) for c in cols]
            row += [_fmt(v) for v in trace.theta[i]]
            w.writerow(row)
    return path


def read_trace(path) -> SimulationTrace:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    head = rows[0]
    n_fixed = len(TRACE_COLUMNS)
    if tuple(head[:n_fixed]) != TRACE_COLUMNS:
        raise ValueError(f"{path}: unexpected header {head[:n_fixed]}")
    n_params = len(head) - n_fixed
    body = rows[1:]
    cols = {}
    for j, name in enumerate(TRACE_COLUMNS):
        vals = [r[j] for r in body]
        cols[name] = np.array([int(v) for v in vals], dtype=int) if name == "k" else np.array(vals, dtype=float)
    theta = np.array([[float(v) for v in r[n_fixed:]] for r in body], dtype=float).reshape(len(body), n_params)
    return SimulationTrace(cols, theta)
