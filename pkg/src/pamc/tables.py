"""CSV reading and writing for every table the pipeline produces.

All floats are written with ``repr``, the shortest string that round-trips
to the same double, so downstream consumers lose nothing.  Line endings are
fixed to "\\n" regardless of platform so byte-for-byte comparisons of
output files are meaningful.
"""

from __future__ import annotations

import csv

import numpy as np

from .action import ObservationSet
from .errors import ConfigError

DATA_HEADER = ["step", "time", "component", "value"]
ACTIONS_HEADER = ["beta", "q", "R_f", "action", "meas_err", "model_err",
                  "accept_rate", "n_accepted"]
PARAMS_HEADER = ["beta", "q", "nu_est"]

# the N_I-mean path is stored in est_path.csv under this chain index
MEAN_PATH_Q = -1


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        raise TypeError("booleans have no place in these tables")
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def state_header(dimension: int) -> list:
    return [f"x{a}" for a in range(dimension)]


def write_table(path, header, rows):
    """Write one CSV with fixed header and round-trip float formatting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


class TableWriter:
    """Incremental CSV writer that flushes after every append batch.

    Used for the per-rung tables so an aborted run still leaves all
    completed rungs on disk.
    """

    def __init__(self, path, header):
        self._fh = open(path, "w", encoding="utf-8", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(header)
        self._fh.flush()

    def append(self, rows):
        for row in rows:
            self._w.writerow([_fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_table(path):
    """Read one CSV into (header, rows-of-strings)."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            r = csv.reader(fh)
            try:
                header = next(r)
            except StopIteration:
                raise ConfigError(f"{path} is empty") from None
            return header, list(r)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _require_header(path, got, want):
    if got[: len(want)] != want:
        raise ConfigError(f"{path} has header {got}, expected {want}...")


def data_rows(truth, obs_steps, obs_components, values, dt):
    """Rows for data.csv: one (step, time, component, value) per site."""
    for k, n in enumerate(obs_steps):
        t = float(n) * dt
        for j, a in enumerate(obs_components):
            yield [int(n), t, int(a), float(values[k, j])]


def trajectory_rows(states, dt, start_step=0):
    """Rows of (step, time, x0..xD-1) for truth.csv and prediction.csv."""
    for i in range(states.shape[0]):
        n = start_step + i
        yield [int(n), float(n) * dt, *map(float, states[i])]


def action_row(row):
    """One actions.csv row from a RunRecordRow."""
    return [row.beta, row.q, row.R_f, row.action_total,
            row.measurement_error, row.model_error, row.acceptance_rate,
            row.n_accepted]


def param_row(row):
    """One params.csv row from a RunRecordRow (first model parameter)."""
    return [row.beta, row.q, float(row.params[0])]


def est_path_rows(final_paths, dt):
    """Rows for est_path.csv: each chain's expected path, then the mean.

    The ensemble-mean path is appended with chain index MEAN_PATH_Q.
    """
    for q, p in enumerate(final_paths):
        for n in range(p.states.shape[0]):
            yield [q, n, float(n) * dt, *map(float, p.states[n])]
    mean = sum(p.states for p in final_paths) / len(final_paths)
    for n in range(mean.shape[0]):
        yield [MEAN_PATH_Q, n, float(n) * dt, *map(float, mean[n])]


def read_observations(path, R_m):
    """Rebuild the ObservationSet from data.csv.

    The observed sites must form a full (steps x components) grid; repr
    floats round-trip, so the values equal the written ones bit for bit.
    """
    header, rows = read_table(path)
    _require_header(path, header, DATA_HEADER)
    by_step = {}
    for row in rows:
        n, a, v = int(row[0]), int(row[2]), float(row[3])
        comp_map = by_step.setdefault(n, {})
        if a in comp_map:
            raise ConfigError(f"{path}: duplicate site step={n} component={a}")
        comp_map[a] = v
    if not by_step:
        raise ConfigError(f"{path} holds no observations")
    steps = sorted(by_step)
    comps = sorted(by_step[steps[0]])
    values = np.empty((len(steps), len(comps)))
    for i, n in enumerate(steps):
        if sorted(by_step[n]) != comps:
            raise ConfigError(
                f"{path}: step {n} observes different components than step "
                f"{steps[0]}; observed sites must form a full grid"
            )
        values[i] = [by_step[n][a] for a in comps]
    return ObservationSet(np.asarray(steps), np.asarray(comps), values, R_m=R_m)


def read_trajectory(path):
    """Read truth.csv or prediction.csv into (steps, states)."""
    header, rows = read_table(path)
    _require_header(path, header, ["step", "time"])
    d = len(header) - 2
    if d < 1:
        raise ConfigError(f"{path} has no state columns")
    steps = np.array([int(r[0]) for r in rows], dtype=np.int64)
    states = np.array([[float(v) for v in r[2 : 2 + d]] for r in rows])
    return steps, states


def read_actions(path):
    """Read actions.csv into a list of per-row dicts with typed values."""
    header, rows = read_table(path)
    _require_header(path, header, ACTIONS_HEADER)
    out = []
    for r in rows:
        out.append({
            "beta": int(r[0]), "q": int(r[1]), "R_f": float(r[2]),
            "action": float(r[3]), "meas_err": float(r[4]),
            "model_err": float(r[5]), "accept_rate": float(r[6]),
            "n_accepted": int(r[7]),
        })
    return out


def read_params(path):
    """Read params.csv into a list of (beta, q, nu_est) dicts."""
    header, rows = read_table(path)
    _require_header(path, header, PARAMS_HEADER)
    return [{"beta": int(r[0]), "q": int(r[1]), "nu_est": float(r[2])}
            for r in rows]


def read_est_paths(path):
    """Read est_path.csv into {q: states array}, keyed by chain index.

    The ensemble-mean rows come back under key MEAN_PATH_Q.
    """
    header, rows = read_table(path)
    _require_header(path, header, ["q", "step", "time"])
    d = len(header) - 3
    if d < 1:
        raise ConfigError(f"{path} has no state columns")
    grouped = {}
    for r in rows:
        q, n = int(r[0]), int(r[1])
        grouped.setdefault(q, []).append((n, [float(v) for v in r[3 : 3 + d]]))
    out = {}
    for q, entries in grouped.items():
        entries.sort(key=lambda e: e[0])
        if [n for n, _ in entries] != list(range(len(entries))):
            raise ConfigError(f"{path}: chain {q} is missing path steps")
        out[q] = np.array([vals for _, vals in entries])
    return out
