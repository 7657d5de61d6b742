"""The standard-model action: measurement error plus model error.

The action of a path X = {x(0), ..., x(N), p} against observations y is

    A(X) = sum_k sum_l (R_m/2) (y_l(t_k) - x_l(t_k))^2
         + (R_f/2) sum_{n=0}^{N-1} sum_a (x_a(n+1) - f_a(x(n), p))^2

with the first sum over observed steps and components only. Sampling
weights paths by exp(-A). ``delta_action`` gives the change in A under a
single-coordinate update in O(D) work instead of O(N D), which is what
makes single-site Metropolis sweeps affordable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import ModelSpec

__all__ = [
    "Path",
    "ObservationSet",
    "ActionBreakdown",
    "measurement_error",
    "model_error",
    "action",
    "delta_action",
]


@dataclass
class Path:
    """A candidate trajectory plus model parameters.

    ``states`` has shape (N+1, D): the state at each of the N+1 time
    points of the estimation window. ``params`` holds the N_p model
    parameters being estimated alongside the states.
    """

    states: np.ndarray
    params: np.ndarray

    def __post_init__(self):
        self.states = np.ascontiguousarray(self.states, dtype=np.float64)
        self.params = np.ascontiguousarray(self.params, dtype=np.float64)
        if self.states.ndim != 2:
            raise ValueError(f"states must be 2-d (N+1, D), got shape {self.states.shape}")
        if self.params.ndim != 1:
            raise ValueError(f"params must be 1-d, got shape {self.params.shape}")
        if not np.all(np.isfinite(self.states)):
            raise ValueError("states contain non-finite entries")
        if not np.all(np.isfinite(self.params)):
            raise ValueError("params contain non-finite entries")

    @property
    def n_transitions(self) -> int:
        """N: the number of model steps the window spans."""
        return self.states.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    def copy(self) -> "Path":
        return Path(self.states.copy(), self.params.copy())


@dataclass
class ObservationSet:
    """Measured values on a subset of time steps and components.

    ``obs_steps`` are the step indices carrying measurements, ``obs_components``
    the measured coordinates (0-based), and ``values[k, l]`` the measured
    value of component ``obs_components[l]`` at step ``obs_steps[k]``.
    ``R_m`` is the scalar measurement precision. Entries are canonicalized
    to ascending step and component order on construction, so two sets
    with the same content give bit-identical sums regardless of input
    order.
    """

    obs_steps: np.ndarray
    obs_components: np.ndarray
    values: np.ndarray
    R_m: float = 1.0
    _step_row: dict = field(init=False, repr=False)
    _comp_col: dict = field(init=False, repr=False)

    def __post_init__(self):
        steps = np.asarray(self.obs_steps, dtype=np.int64)
        comps = np.asarray(self.obs_components, dtype=np.int64)
        vals = np.asarray(self.values, dtype=np.float64)
        if steps.ndim != 1 or comps.ndim != 1:
            raise ValueError("obs_steps and obs_components must be 1-d")
        if vals.shape != (steps.size, comps.size):
            raise ValueError(
                f"values shape {vals.shape} does not match "
                f"({steps.size} steps, {comps.size} components)"
            )
        if steps.size != np.unique(steps).size:
            raise ValueError("obs_steps contains duplicates")
        if comps.size != np.unique(comps).size:
            raise ValueError("obs_components contains duplicates")
        if np.any(steps < 0) or np.any(comps < 0):
            raise ValueError("step and component indices must be non-negative")
        if not np.all(np.isfinite(vals)):
            raise ValueError("observed values contain non-finite entries")
        if self.R_m < 0:
            raise ValueError(f"R_m must be >= 0, got {self.R_m}")
        step_order = np.argsort(steps)
        comp_order = np.argsort(comps)
        self.obs_steps = np.ascontiguousarray(steps[step_order])
        self.obs_components = np.ascontiguousarray(comps[comp_order])
        self.values = np.ascontiguousarray(vals[np.ix_(step_order, comp_order)])
        self._step_row = {int(n): k for k, n in enumerate(self.obs_steps)}
        self._comp_col = {int(a): l for l, a in enumerate(self.obs_components)}

    @property
    def n_observed_steps(self) -> int:
        return self.obs_steps.size

    @property
    def n_observed_components(self) -> int:
        return self.obs_components.size

    def dense_maps(self, n_transitions: int, dimension: int):
        """Dense lookup tables for kernel use.

        Returns (step_row, comp_col): step_row[n] is the row of ``values``
        for step n or -1 if unobserved; comp_col[a] likewise for columns.
        """
        if self.obs_steps.size and int(self.obs_steps[-1]) > n_transitions:
            raise ValueError(
                f"observation step {int(self.obs_steps[-1])} beyond last path step {n_transitions}"
            )
        if self.obs_components.size and int(self.obs_components[-1]) >= dimension:
            raise ValueError(
                f"observed component {int(self.obs_components[-1])} "
                f"outside dimension {dimension}"
            )
        step_row = np.full(n_transitions + 1, -1, dtype=np.int64)
        step_row[self.obs_steps] = np.arange(self.obs_steps.size)
        comp_col = np.full(dimension, -1, dtype=np.int64)
        comp_col[self.obs_components] = np.arange(self.obs_components.size)
        return step_row, comp_col


@dataclass(frozen=True)
class ActionBreakdown:
    """Action split into its two competing terms."""

    measurement_error: float
    model_error: float
    total: float


def _check_consistent(path: Path, obs: ObservationSet):
    if obs.obs_steps.size and int(obs.obs_steps[-1]) > path.n_transitions:
        raise ValueError(
            f"observation step {int(obs.obs_steps[-1])} beyond last path step "
            f"{path.n_transitions}"
        )
    if obs.obs_components.size and int(obs.obs_components[-1]) >= path.dimension:
        raise ValueError(
            f"observed component {int(obs.obs_components[-1])} outside "
            f"dimension {path.dimension}"
        )


def measurement_error(path: Path, obs: ObservationSet) -> float:
    """Sum of (R_m/2) squared residuals over observed steps and components."""
    _check_consistent(path, obs)
    if obs.obs_steps.size == 0 or obs.obs_components.size == 0:
        return 0.0
    resid = obs.values - path.states[np.ix_(obs.obs_steps, obs.obs_components)]
    return 0.5 * obs.R_m * float(np.sum(resid * resid))


def model_error(path: Path, model: ModelSpec, R_f: float) -> float:
    """Sum of (R_f/2) squared one-step prediction residuals along the path."""
    if R_f < 0:
        raise ValueError(f"R_f must be >= 0, got {R_f}")
    if path.dimension != model.dimension:
        raise ValueError(
            f"path dimension {path.dimension} does not match model dimension "
            f"{model.dimension}"
        )
    if path.params.size != model.parameter_count:
        raise ValueError(
            f"path has {path.params.size} params, model expects {model.parameter_count}"
        )
    if R_f == 0.0:
        return 0.0
    d = model.dimension
    step_into = model.active_step_into
    fx = np.empty(d)
    w1, w2, w3 = np.empty(d), np.empty(d), np.empty(d)
    states = path.states
    total = 0.0
    for n in range(path.n_transitions):
        step_into(states[n], path.params, model.dt, fx, w1, w2, w3)
        if not np.all(np.isfinite(fx)):
            raise ValueError(f"model map produced non-finite output at step {n}")
        r = states[n + 1] - fx
        total += float(np.dot(r, r))
    return 0.5 * R_f * total


def action(path: Path, obs: ObservationSet, model: ModelSpec, R_f: float) -> ActionBreakdown:
    """Full action of a path: measurement error plus model error."""
    me = measurement_error(path, obs)
    mo = model_error(path, model, R_f)
    return ActionBreakdown(measurement_error=me, model_error=mo, total=me + mo)


def delta_action(
    path: Path,
    site,
    new_value: float,
    obs: ObservationSet,
    model: ModelSpec,
    R_f: float,
) -> float:
    """Change in action if one path coordinate were set to ``new_value``.

    ``site`` is either ``(n, a)`` for state coordinate x_a(n) or a bare
    integer for parameter index. Only the terms that coordinate enters are
    recomputed: a state site touches one residual of the incoming
    transition, the whole outgoing transition, and at most one
    measurement term; a parameter touches every transition. The path
    itself is never modified.
    """
    if R_f < 0:
        raise ValueError(f"R_f must be >= 0, got {R_f}")
    if not np.isfinite(new_value):
        raise ValueError(f"proposed value must be finite, got {new_value}")
    _check_consistent(path, obs)
    states = path.states
    n_trans = path.n_transitions
    d = model.dimension
    step_into = model.active_step_into
    fx = np.empty(d)
    w1, w2, w3 = np.empty(d), np.empty(d), np.empty(d)

    if isinstance(site, tuple):
        n, a = site
        if not (0 <= n <= n_trans and 0 <= a < d):
            raise ValueError(f"state site {site} outside path of shape {states.shape}")
        old_value = states[n, a]
        if new_value == old_value:
            return 0.0
        delta = 0.0
        row = obs._step_row.get(n)
        col = obs._comp_col.get(a)
        if row is not None and col is not None:
            y = obs.values[row, col]
            delta += 0.5 * obs.R_m * ((y - new_value) ** 2 - (y - old_value) ** 2)
        if R_f > 0.0 and n > 0:
            step_into(states[n - 1], path.params, model.dt, fx, w1, w2, w3)
            fa = fx[a]
            delta += 0.5 * R_f * ((new_value - fa) ** 2 - (old_value - fa) ** 2)
        if R_f > 0.0 and n < n_trans:
            step_into(states[n], path.params, model.dt, fx, w1, w2, w3)
            r_old = states[n + 1] - fx
            xn = states[n].copy()
            xn[a] = new_value
            step_into(xn, path.params, model.dt, fx, w1, w2, w3)
            if not np.all(np.isfinite(fx)):
                raise ValueError(f"model map produced non-finite output at step {n}")
            r_new = states[n + 1] - fx
            delta += 0.5 * R_f * float(np.dot(r_new, r_new) - np.dot(r_old, r_old))
        return delta

    j = int(site)
    if not (0 <= j < path.params.size):
        raise ValueError(f"parameter index {j} outside {path.params.size} params")
    old_value = path.params[j]
    if new_value == old_value:
        return 0.0
    if R_f == 0.0:
        return 0.0
    new_params = path.params.copy()
    new_params[j] = new_value
    delta = 0.0
    for n in range(n_trans):
        step_into(states[n], path.params, model.dt, fx, w1, w2, w3)
        r_old = states[n + 1] - fx
        step_into(states[n], new_params, model.dt, fx, w1, w2, w3)
        if not np.all(np.isfinite(fx)):
            raise ValueError(f"model map produced non-finite output at step {n}")
        r_new = states[n + 1] - fx
        delta += 0.5 * R_f * float(np.dot(r_new, r_new) - np.dot(r_old, r_old))
    return delta
