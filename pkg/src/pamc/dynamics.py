"""Discrete-time dynamical models and the Lorenz96 system.

A model is a deterministic one-step map ``x(n+1) = f(x(n), p)`` together
with the continuous vector field it discretizes (when there is one). The
map is the unit everything downstream consumes: the action's model-error
term, trajectory generation, and prediction all call the same ``f``, so a
trajectory produced by iterating the map has model error exactly zero.

The one-step maps come in two forms that are kept bit-identical:

* an in-place scalar kernel (``step_into``) used by the samplers' hot
  loops, compiled with numba when available, and
* the public ``ModelSpec.step`` / ``ModelSpec.integrate`` methods, which
  call the same kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._jit import NUMBA_AVAILABLE, njit
from .errors import IntegrationOverflowError

__all__ = [
    "ModelSpec",
    "lorenz96_vector_field",
    "lorenz96_model",
    "linear_map_model",
    "rk4_step",
    "largest_lyapunov_exponent",
]


def lorenz96_vector_field(x: np.ndarray, nu: float) -> np.ndarray:
    """Lorenz96 right-hand side with cyclic coupling.

    dx_a/dt = x_{a-1} (x_{a+1} - x_{a-2}) - x_a + nu, indices mod D.
    Requires D >= 4; the three-point stencil is undefined below that.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 4:
        raise ValueError(f"lorenz96 needs a 1-d state with D >= 4, got shape {x.shape}")
    return np.roll(x, 1) * (np.roll(x, -1) - np.roll(x, 2)) - x + nu


def _l96_vf_into(x, nu, out):
    d = x.shape[0]
    for a in range(d):
        am1 = a - 1
        if am1 < 0:
            am1 += d
        am2 = a - 2
        if am2 < 0:
            am2 += d
        ap1 = a + 1
        if ap1 >= d:
            ap1 -= d
        out[a] = x[am1] * (x[ap1] - x[am2]) - x[a] + nu


def _make_l96_step(vf_into):
    def step_into(x, params, dt, out, k, xt, acc):
        # Classic RK4; term grouping matches rk4_step() exactly so both
        # routes produce bit-identical states.
        nu = params[0]
        d = x.shape[0]
        h = 0.5 * dt
        vf_into(x, nu, k)
        for a in range(d):
            acc[a] = k[a]
            xt[a] = x[a] + h * k[a]
        vf_into(xt, nu, k)
        for a in range(d):
            acc[a] = acc[a] + 2.0 * k[a]
            xt[a] = x[a] + h * k[a]
        vf_into(xt, nu, k)
        for a in range(d):
            acc[a] = acc[a] + 2.0 * k[a]
            xt[a] = x[a] + dt * k[a]
        vf_into(xt, nu, k)
        sixth = dt / 6.0
        for a in range(d):
            out[a] = x[a] + sixth * (acc[a] + k[a])

    return step_into


_l96_vf_into_jit = njit(_l96_vf_into)
_l96_step_into = _make_l96_step(_l96_vf_into)
_l96_step_into_jit = njit(_make_l96_step(_l96_vf_into_jit))


def rk4_step(
    x: np.ndarray,
    params: np.ndarray,
    dt: float,
    vector_field: Callable | None = None,
) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step.

    ``vector_field(x, params)`` defaults to the Lorenz96 right-hand side
    with forcing ``params[0]``. Raises IntegrationOverflowError if the
    result is not finite.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    x = np.asarray(x, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    if vector_field is None:
        vector_field = lambda s, p: lorenz96_vector_field(s, p[0])
    k1 = vector_field(x, params)
    k2 = vector_field(x + 0.5 * dt * k1, params)
    k3 = vector_field(x + 0.5 * dt * k2, params)
    k4 = vector_field(x + dt * k3, params)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationOverflowError("rk4 step produced a non-finite state", step_index=0)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """A discrete-time model: dimension, parameters, step size, and maps.

    ``step_into(x, params, dt, out, w1, w2, w3)`` writes f(x, p) into
    ``out`` using the three scratch vectors; ``step_into_jit`` is the
    numba-compiled twin used by the sampling kernels. ``vector_field`` is
    the continuous-time right-hand side when the map is an integrator
    step, else None.
    """

    name: str
    dimension: int
    parameter_count: int
    dt: float
    step_into: Callable
    step_into_jit: Callable | None = None
    vector_field: Callable | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dimension}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")

    @property
    def active_step_into(self) -> Callable:
        """The kernel actually used for stepping (compiled when possible)."""
        if NUMBA_AVAILABLE and self.step_into_jit is not None:
            return self.step_into_jit
        return self.step_into

    def step(self, x: np.ndarray, params: np.ndarray) -> np.ndarray:
        """Apply the one-step map f(x, p)."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        params = np.ascontiguousarray(params, dtype=np.float64)
        d = self.dimension
        out = np.empty(d)
        w1, w2, w3 = np.empty(d), np.empty(d), np.empty(d)
        self.active_step_into(x, params, self.dt, out, w1, w2, w3)
        if not np.all(np.isfinite(out)):
            raise IntegrationOverflowError("model step produced a non-finite state", step_index=0)
        return out

    def integrate(self, x0: np.ndarray, params: np.ndarray, n_steps: int) -> np.ndarray:
        """Iterate the map; returns an (n_steps+1, D) trajectory, row 0 = x0."""
        if n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {n_steps}")
        x0 = np.ascontiguousarray(x0, dtype=np.float64)
        params = np.ascontiguousarray(params, dtype=np.float64)
        d = self.dimension
        if x0.shape != (d,):
            raise ValueError(f"x0 shape {x0.shape} does not match dimension {d}")
        traj = np.empty((n_steps + 1, d))
        traj[0] = x0
        w1, w2, w3 = np.empty(d), np.empty(d), np.empty(d)
        step_into = self.active_step_into
        for n in range(n_steps):
            step_into(traj[n], params, self.dt, traj[n + 1], w1, w2, w3)
            if not np.all(np.isfinite(traj[n + 1])):
                raise IntegrationOverflowError(
                    f"trajectory overflowed at step {n + 1}", step_index=n + 1
                )
        return traj


def lorenz96_model(dimension: int = 20, dt: float = 0.025) -> ModelSpec:
    """Lorenz96 with forcing as the single parameter, stepped by RK4."""
    if dimension < 4:
        raise ValueError(f"lorenz96 needs D >= 4, got {dimension}")
    return ModelSpec(
        name="lorenz96",
        dimension=dimension,
        parameter_count=1,
        dt=dt,
        step_into=_l96_step_into,
        step_into_jit=_l96_step_into_jit,
        vector_field=lambda x, params: lorenz96_vector_field(x, params[0]),
    )


def linear_map_model(gain: float, dimension: int = 1) -> ModelSpec:
    """Pure contraction map f(x) = gain * x; no parameters, no ODE.

    The posterior over paths of this model is exactly Gaussian, which
    makes it the reference problem for validating the samplers.
    """

    def step_into(x, params, dt, out, w1, w2, w3):
        for a in range(x.shape[0]):
            out[a] = gain * x[a]

    return ModelSpec(
        name=f"linear_gain_{gain}",
        dimension=dimension,
        parameter_count=0,
        dt=1.0,
        step_into=step_into,
        step_into_jit=njit(step_into) if NUMBA_AVAILABLE else None,
        vector_field=None,
    )


def largest_lyapunov_exponent(
    model: ModelSpec,
    params: np.ndarray,
    x0: np.ndarray,
    transient_steps: int = 2000,
    window_time: float = 3.0,
    delta0: float = 1e-8,
    n_windows: int = 1,
) -> float:
    """Divergence-rate estimate of the largest Lyapunov exponent.

    Runs ``transient_steps`` map steps to reach the attractor, offsets a
    companion trajectory by ``delta0`` in the first component, and fits
    the least-squares slope of the log separation over ``window_time``
    model time units. With ``n_windows > 1`` the perturbation is rescaled
    back to ``delta0`` after each window and the slopes are averaged.

    Finite windows sample local divergence rates, so single-window
    estimates scatter around the asymptotic exponent; average over many
    windows for a converged value.
    """
    params = np.asarray(params, dtype=np.float64)
    n_steps = int(round(window_time / model.dt))
    if n_steps < 2:
        raise ValueError("window_time must cover at least 2 map steps")
    t = np.arange(n_steps + 1) * model.dt
    design = np.vstack([t, np.ones_like(t)]).T
    base = model.integrate(x0, params, transient_steps)[-1]
    pert = base.copy()
    pert[0] += delta0
    slope_sum = 0.0
    for _ in range(n_windows):
        base_traj = model.integrate(base, params, n_steps)
        pert_traj = model.integrate(pert, params, n_steps)
        dist = np.sqrt(np.sum((pert_traj - base_traj) ** 2, axis=1))
        slope, _ = np.linalg.lstsq(design, np.log(dist), rcond=None)[0]
        slope_sum += slope
        base = base_traj[-1]
        pert = base + (delta0 / dist[-1]) * (pert_traj[-1] - base)
    return slope_sum / n_windows
