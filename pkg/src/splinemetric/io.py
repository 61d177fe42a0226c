"""Text formats: SPD dataset files, results JSON, spline model JSON.

Everything numeric is written as decimal text with 17 significant
digits, which round-trips IEEE doubles exactly, so files regenerate
bit-identical runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .spd import as_spd
from .spline import KnotGrid, MonotoneSplineParams, build_grid
from .training import LabeledSpdDataset, ProbeModel

__all__ = [
    "format_float",
    "dumps_spd_dataset",
    "loads_spd_dataset",
    "write_spd_dataset",
    "read_spd_dataset",
    "dumps_spline_model",
    "loads_spline_model",
    "save_spline_model",
    "load_spline_model",
    "write_results",
    "write_history_jsonl",
    "probe_model_to_dict",
]

SPD_MAGIC = "spd"
SPD_VERSION = "v1"


def format_float(v: float) -> str:
    return f"{float(v):.17g}"


def _pack_upper(m: np.ndarray) -> list[float]:
    n = m.shape[0]
    return [m[i, j] for i in range(n) for j in range(i, n)]


def _unpack_upper(values, n: int) -> np.ndarray:
    m = np.zeros((n, n))
    it = iter(values)
    for i in range(n):
        for j in range(i, n):
            m[i, j] = m[j, i] = next(it)
    return m


def dumps_spd_dataset(dataset: LabeledSpdDataset) -> str:
    """Header 'spd v1 <dim> <count> <classes>', then one record per line:
    label followed by the upper-triangle entries in row-major order."""
    lines = [f"{SPD_MAGIC} {SPD_VERSION} {dataset.dim} {len(dataset)} "
             f"{dataset.class_count}"]
    for label, mat in zip(dataset.labels, dataset.matrices):
        vals = " ".join(format_float(v) for v in _pack_upper(mat))
        lines.append(f"{int(label)} {vals}")
    return "\n".join(lines) + "\n"


def loads_spd_dataset(text: str, project: bool = False) -> LabeledSpdDataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty dataset file")
    header = lines[0].split()
    if len(header) != 5 or header[0] != SPD_MAGIC or header[1] != SPD_VERSION:
        raise ValueError(f"malformed header: {lines[0]!r}")
    dim, count, classes = (int(x) for x in header[2:])
    if len(lines) - 1 != count:
        raise ValueError(f"header promises {count} records, found "
                         f"{len(lines) - 1}")
    n_vals = dim * (dim + 1) // 2
    labels = np.empty(count, dtype=int)
    mats = np.empty((count, dim, dim))
    for i, line in enumerate(lines[1:]):
        parts = line.split()
        if len(parts) != 1 + n_vals:
            raise ValueError(f"record {i}: expected {1 + n_vals} fields, "
                             f"got {len(parts)}")
        labels[i] = int(parts[0])
        if not 0 <= labels[i] < classes:
            raise ValueError(f"record {i}: label {labels[i]} outside "
                             f"[0, {classes})")
        mats[i] = as_spd(_unpack_upper(map(float, parts[1:]), dim),
                         project=project)
    return LabeledSpdDataset(mats, labels)


def write_spd_dataset(path, dataset: LabeledSpdDataset):
    Path(path).write_text(dumps_spd_dataset(dataset))


def read_spd_dataset(path, project: bool = False) -> LabeledSpdDataset:
    return loads_spd_dataset(Path(path).read_text(), project=project)


def dumps_spline_model(grid: KnotGrid, params: MonotoneSplineParams) -> str:
    steps = ", ".join(format_float(w) for w in params.step_weights)
    return ('{"degree": %d, "interior_intervals": %d, "range": [%s, %s], '
            '"c0_raw": %s, "step_weights": [%s], "min_step": %s}\n'
            % (grid.degree, grid.interior_intervals,
               format_float(grid.lo), format_float(grid.hi),
               format_float(params.c0_raw), steps,
               format_float(params.min_step)))


def loads_spline_model(text: str) -> tuple[KnotGrid, MonotoneSplineParams]:
    try:
        obj = json.loads(text)
        grid = build_grid(int(obj["degree"]), int(obj["interior_intervals"]),
                          (float(obj["range"][0]), float(obj["range"][1])))
        params = MonotoneSplineParams(
            float(obj["c0_raw"]),
            np.asarray(obj["step_weights"], dtype=float),
            float(obj["min_step"]))
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise ValueError(f"malformed spline model: {exc}") from exc
    if len(params.step_weights) != grid.n_basis - 1:
        raise ValueError("step_weights length does not match the grid")
    return grid, params


def save_spline_model(path, grid: KnotGrid, params: MonotoneSplineParams):
    Path(path).write_text(dumps_spline_model(grid, params))


def load_spline_model(path) -> tuple[KnotGrid, MonotoneSplineParams]:
    return loads_spline_model(Path(path).read_text())


def write_results(path, results: dict):
    Path(path).write_text(json.dumps(results, indent=2, sort_keys=True)
                          + "\n")


def write_history_jsonl(path, history: list[dict]):
    lines = [json.dumps(row, sort_keys=True) for row in history]
    Path(path).write_text("\n".join(lines) + "\n")


def probe_model_to_dict(model: ProbeModel) -> dict:
    """JSON-ready snapshot of a trained probe, spline included if any."""
    from .metrics import (
        LogCholeskyMetric,
        LogEuclideanMetric,
        PowerCholeskyMetric,
        SplineCholeskyMetric,
        SplineSpectralMetric,
    )
    metric = model.metric
    if isinstance(metric, (SplineSpectralMetric, SplineCholeskyMetric)):
        kind = "sspm" if isinstance(metric, SplineSpectralMetric) else "cspm"
        spline = json.loads(dumps_spline_model(metric.curve.grid,
                                               metric.curve.params))
        desc = {"kind": kind, "spline": spline}
    elif isinstance(metric, LogEuclideanMetric):
        desc = {"kind": "le"}
    elif isinstance(metric, LogCholeskyMetric):
        desc = {"kind": "lc"}
    elif isinstance(metric, PowerCholeskyMetric):
        desc = {"kind": "pcm", "theta": metric.theta}
    else:
        raise TypeError(f"unknown metric {metric!r}")
    return {
        "metric": desc,
        "standardizer": {
            "running_mean": model.standardizer.running_mean.tolist(),
            "running_var": model.standardizer.running_var.tolist(),
            "momentum": model.standardizer.momentum,
            "eps": model.standardizer.eps,
        },
        "weight": model.weight.tolist(),
        "bias": model.bias.tolist(),
    }
