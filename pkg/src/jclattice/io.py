"""Artifact writers with stable, reproducible formatting.

All floats are rendered with 17 significant digits so that a rerun with
identical inputs produces byte-identical CSV and JSON files.  Non-finite
values map to empty CSV fields and JSON nulls.
"""

import dataclasses
import hashlib
import json

import numpy as np

__all__ = [
    "write_timeseries_csv",
    "write_phase_grid_csv",
    "write_summary_json",
    "render_json",
    "sanitize",
    "config_hash",
]


def _fmt(x):
    # empty field for NaN/inf keeps numeric columns parseable by pandas et al.
    x = float(x)
    if not np.isfinite(x):
        return ""
    return "%.17g" % x


def _site_cols(stem, M):
    return ["%s_%d" % (stem, i + 1) for i in range(M)]


def write_timeseries_csv(series, path):
    """Write a TimeSeries to CSV.

    Column layout: t, N_1..N_M, sz_1..sz_M, z, then g2_1..g2_M when
    correlations were recorded, then stderr columns (N_err_*, sz_err_*,
    z_err, g2_err_*) when the run produced them, then precision_limited
    (0/1) for semiclassical runs.  Returns the path written.
    """
    N = np.asarray(series.N)
    n_t, M = N.shape
    header = ["t"] + _site_cols("N", M) + _site_cols("sz", M) + ["z"]
    blocks = [np.asarray(series.times)[:, None], N, np.asarray(series.sz),
              np.asarray(series.z)[:, None]]
    if series.g2 is not None:
        header += _site_cols("g2", M)
        blocks.append(np.asarray(series.g2))
    if series.N_err is not None:
        header += _site_cols("N_err", M) + _site_cols("sz_err", M) + ["z_err"]
        blocks += [np.asarray(series.N_err), np.asarray(series.sz_err),
                   np.asarray(series.z_err)[:, None]]
        if series.g2_err is not None:
            header += _site_cols("g2_err", M)
            blocks.append(np.asarray(series.g2_err))
    flags = None
    if series.precision_limited is not None:
        header.append("precision_limited")
        flags = np.asarray(series.precision_limited)
    table = np.hstack(blocks)
    lines = [",".join(header)]
    for s in range(n_t):
        row = [_fmt(v) for v in table[s]]
        if flags is not None:
            row.append("1" if flags[s] else "0")
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_phase_grid_csv(grid, path):
    """Write a PhaseDiagramGrid to CSV, one row per cell.

    Columns: d1, <axis2 name>, stable (0/1), t_break (empty when the cell
    never broke), z_long.  Cells are ordered with the second axis outermost
    so each sweep row stays contiguous in the file.
    """
    header = ["d1", grid.axis2_name, "stable", "t_break", "z_long"]
    lines = [",".join(header)]
    for j, a2 in enumerate(grid.axis2_values):
        for i, d1 in enumerate(grid.d1_values):
            row = [
                _fmt(d1),
                _fmt(a2),
                "1" if grid.stable[j, i] else "0",
                _fmt(grid.t_break[j, i]),
                _fmt(grid.z_long[j, i]),
            ]
            lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def sanitize(obj):
    """Recursively convert an object into plain JSON-compatible data.

    numpy scalars and arrays become Python numbers and lists, dataclasses
    become dicts, NaN/inf become None, dict keys are coerced to str.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return sanitize(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": sanitize(obj.real), "im": sanitize(obj.imag)}
    return obj


def render_json(data):
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(sanitize(data), sort_keys=True, indent=2) + "\n"


def write_summary_json(data, path):
    with open(path, "w") as fh:
        fh.write(render_json(data))
    return path


def config_hash(config):
    """sha256 over the canonical compact JSON rendering of a config dict.

    Used to tag output artifacts with the exact inputs that produced them;
    wall-clock fields never enter the hash.
    """
    text = json.dumps(sanitize(config), sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
