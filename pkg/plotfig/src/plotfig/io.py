"""Strict readers for the run CSVs and the run identity.

Headers are fixed strings; a mismatch means the file is not what the
caller thinks it is, so it is an error rather than a best-effort parse.
Files with a header but no data rows are an error too, except where a
figure explicitly tolerates them (a zero-length prediction).
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

ACTIONS_HEADER = ["beta", "q", "R_f", "action", "meas_err", "model_err",
                  "accept_rate", "n_accepted"]
PARAMS_HEADER = ["beta", "q", "nu_est"]


class PlotDataError(Exception):
    """An input file is missing, malformed, or empty where data is required."""


def _read_rows(path) -> tuple[list, list]:
    p = Path(path)
    try:
        with p.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise PlotDataError(f"{p}: file is empty, no header") from None
            rows = list(reader)
    except OSError as exc:
        raise PlotDataError(f"cannot read {p}: {exc}") from exc
    return header, rows


def _check_header(path, header, expected):
    if header != expected:
        raise PlotDataError(
            f"{path}: unexpected header {','.join(header)!r}; "
            f"expected {','.join(expected)!r}"
        )


def _as_float_table(path, rows, width) -> np.ndarray:
    try:
        table = np.array([[float(v) for v in row] for row in rows], dtype=np.float64)
    except ValueError as exc:
        raise PlotDataError(f"{path}: non-numeric cell: {exc}") from exc
    if rows and table.shape[1] != width:
        raise PlotDataError(f"{path}: ragged rows")
    return table.reshape(-1, width)


def read_actions(path) -> np.ndarray:
    """actions.csv as a float array with ACTIONS_HEADER column order."""
    header, rows = _read_rows(path)
    _check_header(path, header, ACTIONS_HEADER)
    if not rows:
        raise PlotDataError(f"{path}: no data rows to plot")
    return _as_float_table(path, rows, len(ACTIONS_HEADER))


def read_params(path) -> np.ndarray:
    """params.csv as a float array with PARAMS_HEADER column order."""
    header, rows = _read_rows(path)
    _check_header(path, header, PARAMS_HEADER)
    if not rows:
        raise PlotDataError(f"{path}: no data rows to plot")
    return _as_float_table(path, rows, len(PARAMS_HEADER))


def _state_width(path, header, lead) -> int:
    expected_lead = header[: len(lead)]
    if expected_lead != lead or len(header) <= len(lead):
        raise PlotDataError(
            f"{path}: unexpected header {','.join(header)!r}; "
            f"expected {','.join(lead)},x0,..."
        )
    comps = header[len(lead):]
    if comps != [f"x{a}" for a in range(len(comps))]:
        raise PlotDataError(f"{path}: state columns must be x0..x{len(comps)-1}")
    return len(comps)


def read_trajectory(path, allow_empty=False):
    """truth.csv or prediction.csv: (times, states) with states (n, D).

    ``allow_empty`` tolerates a header-only file and returns zero-length
    arrays, which the time-series figure uses for runs without a
    prediction span.
    """
    header, rows = _read_rows(path)
    d = _state_width(path, header, ["step", "time"])
    if not rows:
        if allow_empty:
            return np.empty(0), np.empty((0, d))
        raise PlotDataError(f"{path}: no data rows to plot")
    table = _as_float_table(path, rows, 2 + d)
    return table[:, 1], table[:, 2:]


def read_est_paths(path):
    """est_path.csv: (times, mean_states) from the ensemble-mean rows.

    The file holds every chain's final expected path plus their mean
    tagged q = -1; the figure draws the mean.
    """
    header, rows = _read_rows(path)
    d = _state_width(path, header, ["q", "step", "time"])
    if not rows:
        raise PlotDataError(f"{path}: no data rows to plot")
    table = _as_float_table(path, rows, 3 + d)
    mean = table[table[:, 0] == -1.0]
    if mean.size == 0:
        raise PlotDataError(f"{path}: no ensemble-mean rows (q = -1)")
    order = np.argsort(mean[:, 1])
    mean = mean[order]
    return mean[:, 2], mean[:, 3:]


def resolve_run_id(meta_path, input_path) -> str:
    """The run identifier stamped on every figure.

    Reads the explicitly given meta file, or the meta.json sitting next
    to the input CSV; a figure without a traceable run identity is not
    reproducible, so absence is an error.
    """
    p = Path(meta_path) if meta_path else Path(input_path).parent / "meta.json"
    try:
        with p.open("r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise PlotDataError(
            f"cannot read run metadata {p}: {exc}; pass --meta PATH"
        ) from exc
    except json.JSONDecodeError as exc:
        raise PlotDataError(f"{p}: not valid JSON: {exc}") from exc
    try:
        return str(meta["_meta"]["run_id"])
    except (TypeError, KeyError):
        raise PlotDataError(f"{p}: no _meta.run_id field") from None
