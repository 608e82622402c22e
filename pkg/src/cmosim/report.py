"""JSON and CSV writers for simulation output.

Files are written to a temporary name in the target directory and renamed
into place, so an error never leaves a partial file behind.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable

import numpy as np

from .pricer import ComparisonReport, IterationResult, SimulationSummary

SCHEMA_VERSION = 1


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _csv(header: list[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def summary_dict(summary: SimulationSummary) -> dict:
    tranches = {}
    for j, name in enumerate(summary.names):
        h = summary.histograms[j]
        tranches[name] = {
            "initial_balance": float(summary.initial_balances[j]),
            "mean": float(summary.mean[j]),
            "std": float(summary.std[j]),
            "mean_per_unit": float(summary.mean[j] / summary.initial_balances[j]),
            "histogram_bins": int(h.counts.size),
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "model": summary.model,
        "price_convention": summary.price_convention,
        "seed": summary.seed,
        "iterations": summary.iterations,
        "tranches": tranches,
        "diagnostics": {
            "mean_default_fraction": summary.mean_default_fraction,
            "mean_prepaid_fraction": summary.mean_prepaid_fraction,
        },
        "warnings": list(summary.warnings),
    }


def comparison_dict(report: ComparisonReport) -> dict:
    first, second = report.models
    return {
        "schema_version": SCHEMA_VERSION,
        "models": [first, second],
        "seed": report.seed,
        "iterations": report.iterations,
        "crn": report.crn,
        "mean": {
            first: dict(zip(report.names, map(float, report.mean_first))),
            second: dict(zip(report.names, map(float, report.mean_second))),
        },
        "std": {
            first: dict(zip(report.names, map(float, report.std_first))),
            second: dict(zip(report.names, map(float, report.std_second))),
        },
        "mean_difference": report.mean_difference,
        "diff_variance": report.diff_variance,
        "t_statistic": report.t_statistic,
        "p_value": report.p_value,
        "alpha": report.alpha,
        "reject_equal_means": report.reject,
        "test": report.test,
    }


def dumps(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def histogram_csv(summary: SimulationSummary, j: int) -> str:
    h = summary.histograms[j]
    rows = zip(h.edges[:-1], h.edges[1:], h.counts.tolist())
    return _csv(["bin_left", "bin_right", "count"], rows)


def values_csv(summary: SimulationSummary) -> str:
    header = ["iteration"] + [n if n == "total" else f"tranche{n}" for n in summary.names]
    rows = ([i] + list(row) for i, row in enumerate(summary.values))
    return _csv(header, rows)


def read_values_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return np.array([[float(v) for v in row[1:]] for row in rows[1:]])


def trace_csv(result: IterationResult) -> str:
    rows = result.trace or []
    if not rows:
        return ""
    header = list(rows[0].keys())
    return _csv(header, ([row[k] for k in header] for row in rows))


def write_summary(summary: SimulationSummary, out_dir, prefix: str = "") -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    path = out_dir / f"{prefix}summary.json"
    atomic_write(path, dumps(summary_dict(summary)))
    written.append(path)
    for j, name in enumerate(summary.names):
        path = out_dir / f"{prefix}histogram_{name}.csv"
        atomic_write(path, histogram_csv(summary, j))
        written.append(path)
    path = out_dir / f"{prefix}values.csv"
    atomic_write(path, values_csv(summary))
    written.append(path)
    return written
