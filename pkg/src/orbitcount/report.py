"""Deterministic JSON and CSV emission for scenario reports."""

import csv
import io
import json
import math
import platform
import sys
from datetime import datetime, timezone
from importlib import metadata

import numpy as np

REPORT_SCHEMA = "orbitcount-report/1"
CSV_COLUMNS = ("t", "total_weight", "weight_d1", "weight_d2", "n_orbits", "n_ghosts")


def to_plain(obj):
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, complex):
        return [to_plain(obj.real), to_plain(obj.imag)]
    return obj


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def meta_block(argv=None):
    return {
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "argv": list(sys.argv if argv is None else argv),
    }


def build_report(kind, scenario, body, *, meta=True, argv=None):
    report = {"schema": REPORT_SCHEMA, "kind": kind, "config": scenario.resolved(),
              "result": body}
    if meta:
        report["meta"] = meta_block(argv)
    return to_plain(report)


def dumps(report):
    """Canonical serialization: sorted keys, fixed separators, trailing newline."""
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def sweep_csv(sweep_report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in sweep_report.rows():
        w.writerow([repr(float(row[0]))] + [int(v) for v in row[1:]])
    return buf.getvalue()


def census_body(census, suspension=False):
    body = census.to_dict(include_samples=False)
    body["summary"] = {
        "n_zeros": len(census.zeros),
        "n_ghosts": len(census.ghosts),
        "n_orbits": len(census.orbits),
        "n_embedded": len(census.embedded),
        "total_weight": census.total_weight,
        "weights_by_degree": {str(k): v for k, v in census.weights_by_degree().items()},
    }
    if suspension:
        body["summary"]["weights_by_period_index"] = {
            str(k): v for k, v in census.weights_by_period_index().items()}
    return body
