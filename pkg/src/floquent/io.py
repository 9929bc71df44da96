"""Bit-exact result emission: CSV tables with shortest round-trip floats and
one JSON summary per run.  Identical configs produce byte-identical files."""

import csv
import json
import os

import numpy as np


def format_value(x):
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if x is None:
        return ""
    return str(x)


def write_csv(path, header, rows):
    """Write one table; every cell goes through format_value."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(x) for x in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    return x


def write_summary(path, payload):
    """Deterministic JSON document (sorted keys, fixed separators)."""
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def spectrum_rows(k_or_param, spectrum):
    """CSV rows (index, k_or_param, E, edge_weight, side) of one spectrum."""
    sides = spectrum.sides
    weights = spectrum.edge_weight
    return [
        (j, k_or_param, spectrum.phases[j], weights[j], sides[j])
        for j in range(spectrum.phases.size)
    ]


def entanglement_rows(report):
    """CSV rows (index, zeta, xi, cut_weight) of one entanglement report."""
    return [
        (j, report.zeta[j], report.xi[j], report.cut_weight[j])
        for j in range(report.zeta.size)
    ]


def marker_rows(field):
    """CSV rows (x, y, marker) of a 2D local marker field (cut axis first)."""
    rows = []
    for x in range(field.shape[0]):
        for y in range(field.shape[1]):
            rows.append((x, y, field[x, y]))
    return rows


def sweep_table(result):
    """Header and rows of a flattened sweep result (one row per grid point).

    Columns are the union of record keys in sorted order; missing entries
    stay empty.
    """
    keys = sorted({k for rec in result.records for k in rec})
    header = [result.axis] + keys
    rows = []
    for value, rec in zip(result.grid, result.records):
        rows.append([value] + [rec.get(k) for k in keys])
    return header, rows
