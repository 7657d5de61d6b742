"""Single-site Metropolis sampling of paths under the action.

One sweep visits every path coordinate x_a(n) in ascending (n, a) order
and then every parameter, proposing Gaussian random-walk moves and
accepting with probability min(1, exp(-delta_A)). Mutations apply
immediately, so later sites in a sweep see earlier acceptances. State
sites share one proposal scale by default; an optional per-site mode
gives every site its own scale, adapted from its own acceptance count.

The hot loop is a multi-sweep kernel compiled per model map. It keeps the
one-step images f(x(n-1)) and f(x(n)) of the row being swept in small
caches, updating them only on acceptance; every delta it computes is
bit-identical to recomputing f at each site, which the test suite checks
against an uncached reference sweep.

RNG discipline: exactly one normal and one uniform are consumed per site
per sweep, drawn from a counter-based generator, so results are
reproducible for a given seed and independent of chunking or threading.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._jit import njit
from .action import ActionBreakdown, ObservationSet, Path, action
from .dynamics import ModelSpec
from .errors import ChainDivergenceError

__all__ = [
    "ChainConfig",
    "ChainResult",
    "mh_accept",
    "adapt_step",
    "sweep",
    "run_chain",
]

# sweeps per kernel call during sampling; amortizes call overhead while
# keeping the per-call normal/uniform buffers modest
_SAMPLE_CHUNK = 256


@dataclass
class ChainConfig:
    """Settings for one Metropolis chain.

    Step scales adapt every ``adapt_block`` sweeps during burn-in, pushing
    the acceptance rate into ``target_accept``, and are frozen afterwards.
    By default all state sites share one scalar scale; with
    ``per_site_steps`` each site keeps its own scale, adapted from its own
    acceptance count. ``initial_step`` may then also be a per-site array
    (as carried over from a previous run's final scales).
    ``average_mode`` selects which post-burn-in sweeps contribute to the
    expected path: every sweep, or only sweeps containing an acceptance.
    """

    burn_in_sweeps: int = 500
    sample_sweeps: int = 1000
    initial_step: float | np.ndarray = 0.1
    param_step: float | np.ndarray = 0.05
    target_accept: tuple = (0.2, 0.5)
    adapt_factor: float = 1.1
    adapt_block: int = 25
    rng_seed: int = 0
    average_mode: str = "per_sweep"
    per_site_steps: bool = False

    def __post_init__(self):
        if self.burn_in_sweeps < 0:
            raise ValueError(f"burn_in_sweeps must be >= 0, got {self.burn_in_sweeps}")
        if self.sample_sweeps < 1:
            raise ValueError(f"sample_sweeps must be >= 1, got {self.sample_sweeps}")
        # a zero step scale is legal: proposals repeat the current value
        # and are always accepted, which the trivial-path tests rely on
        if np.any(np.asarray(self.initial_step) < 0) or np.any(np.asarray(self.param_step) < 0):
            raise ValueError("step scales must be >= 0")
        lo, hi = self.target_accept
        if not (0.0 < lo < hi < 1.0):
            raise ValueError(f"target_accept must satisfy 0 < lo < hi < 1, got {self.target_accept}")
        if self.adapt_factor <= 1.0:
            raise ValueError(f"adapt_factor must be > 1, got {self.adapt_factor}")
        if self.adapt_block < 1:
            raise ValueError(f"adapt_block must be >= 1, got {self.adapt_block}")
        if self.average_mode not in ("per_sweep", "accepted_only"):
            raise ValueError(f"average_mode must be per_sweep or accepted_only, got {self.average_mode!r}")


@dataclass
class ChainResult:
    """Outcome of one chain: the expected path and its statistics.

    ``n_accepted`` counts the recorded post-burn-in snapshots (all sweeps
    under per_sweep, accepting sweeps under accepted_only);
    ``acceptance_rate`` is the fraction of proposals accepted during the
    sampling phase. ``final_step`` is a scalar in shared-scale mode and a
    per-site array when the chain ran with per-site scales, so it can seed
    a follow-up chain either way. ``path_variance`` and ``param_variance``
    are per-coordinate variances over the recorded snapshots, and the
    min/max fields are their coordinatewise envelope.
    """

    expected_path: Path
    n_accepted: int
    acceptance_rate: float
    final_step: float | np.ndarray
    final_param_steps: np.ndarray
    action_at_mean: ActionBreakdown
    path_variance: np.ndarray
    param_variance: np.ndarray
    snapshot_min: np.ndarray
    snapshot_max: np.ndarray
    param_min: np.ndarray
    param_max: np.ndarray


def mh_accept(delta_action: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: accept with probability min(1, exp(-delta_action)).

    Non-positive deltas always accept; +infinity (and NaN) always reject.
    Consumes exactly one uniform draw.
    """
    u = rng.random()
    if delta_action <= 0.0:
        return True
    return bool(u < math.exp(-delta_action))


def adapt_step(step: float, observed_rate: float, target: tuple, adapt_factor: float) -> float:
    """Push a proposal scale toward the target acceptance interval.

    Too many acceptances mean the moves are timid: grow the step. Too few
    mean they overshoot: shrink it.
    """
    lo, hi = target
    if observed_rate > hi:
        return step * adapt_factor
    if observed_rate < lo:
        return step / adapt_factor
    return step


def _make_sweep_kernel(step_into: Callable) -> Callable:
    def kernel(
        states,
        params,
        dt,
        r_f,
        r_m,
        step_row,
        comp_col,
        values,
        state_steps,
        param_steps,
        normals,
        uniforms,
        acc_state,
        acc_site,
        acc_param,
        record_mode,
        sum_states,
        sum_params,
        sumsq_states,
        sumsq_params,
        min_states,
        max_states,
        min_params,
        max_params,
    ):
        n_rows = states.shape[0]
        d = states.shape[1]
        n_p = params.shape[0]
        n_trans = n_rows - 1
        n_sweeps = normals.shape[0]
        fprev = np.empty(d)
        fcur = np.empty(d)
        fprop = np.empty(d)
        fold = np.empty(d)
        w1 = np.empty(d)
        w2 = np.empty(d)
        w3 = np.empty(d)
        pprop = np.empty(n_p)
        n_snap = 0
        for s in range(n_sweeps):
            n_acc_sweep = 0
            idx = 0
            for n in range(n_rows):
                if r_f > 0.0:
                    # f(x(n-1)) was finalized when row n-1 finished
                    if n > 0:
                        for b in range(d):
                            fprev[b] = fcur[b]
                    if n < n_trans:
                        step_into(states[n], params, dt, fcur, w1, w2, w3)
                dot_cur = 0.0
                if r_f > 0.0 and n < n_trans:
                    for b in range(d):
                        r = states[n + 1, b] - fcur[b]
                        dot_cur += r * r
                row = step_row[n]
                for a in range(d):
                    old = states[n, a]
                    new = old + state_steps[n, a] * normals[s, idx]
                    delta = 0.0
                    if row >= 0:
                        col = comp_col[a]
                        if col >= 0:
                            y = values[row, col]
                            delta += 0.5 * r_m * ((y - new) ** 2 - (y - old) ** 2)
                    dot_new = 0.0
                    if r_f > 0.0:
                        if n > 0:
                            fa = fprev[a]
                            delta += 0.5 * r_f * ((new - fa) ** 2 - (old - fa) ** 2)
                        if n < n_trans:
                            states[n, a] = new
                            step_into(states[n], params, dt, fprop, w1, w2, w3)
                            states[n, a] = old
                            for b in range(d):
                                r = states[n + 1, b] - fprop[b]
                                dot_new += r * r
                            delta += 0.5 * r_f * (dot_new - dot_cur)
                    if delta <= 0.0 or uniforms[s, idx] < math.exp(-delta):
                        states[n, a] = new
                        if r_f > 0.0 and n < n_trans:
                            for b in range(d):
                                fcur[b] = fprop[b]
                            dot_cur = dot_new
                        acc_state[s] += 1
                        acc_site[idx] += 1
                        n_acc_sweep += 1
                    idx += 1
            for j in range(n_p):
                old = params[j]
                new = old + param_steps[j] * normals[s, idx]
                delta = 0.0
                if r_f > 0.0 and new != old:
                    for b in range(n_p):
                        pprop[b] = params[b]
                    pprop[j] = new
                    for n in range(n_trans):
                        step_into(states[n], params, dt, fold, w1, w2, w3)
                        step_into(states[n], pprop, dt, fprop, w1, w2, w3)
                        dot_new = 0.0
                        dot_old = 0.0
                        for b in range(d):
                            rn = states[n + 1, b] - fprop[b]
                            dot_new += rn * rn
                            ro = states[n + 1, b] - fold[b]
                            dot_old += ro * ro
                        delta += 0.5 * r_f * (dot_new - dot_old)
                if delta <= 0.0 or uniforms[s, idx] < math.exp(-delta):
                    params[j] = new
                    acc_param[s, j] += 1
                    n_acc_sweep += 1
                idx += 1
            if record_mode == 1 or (record_mode == 2 and n_acc_sweep > 0):
                n_snap += 1
                for n in range(n_rows):
                    for a in range(d):
                        v = states[n, a]
                        sum_states[n, a] += v
                        sumsq_states[n, a] += v * v
                        if v < min_states[n, a]:
                            min_states[n, a] = v
                        if v > max_states[n, a]:
                            max_states[n, a] = v
                for j in range(n_p):
                    v = params[j]
                    sum_params[j] += v
                    sumsq_params[j] += v * v
                    if v < min_params[j]:
                        min_params[j] = v
                    if v > max_params[j]:
                        max_params[j] = v
        return n_snap

    return kernel


_kernel_cache: dict = {}
_kernel_lock = threading.Lock()


def _sweep_kernel_for(model: ModelSpec) -> Callable:
    step_into = model.active_step_into
    with _kernel_lock:
        kernel = _kernel_cache.get(step_into)
        if kernel is None:
            kernel = njit(_make_sweep_kernel(step_into))
            _kernel_cache[step_into] = kernel
    return kernel


def _compile_kernel(model: ModelSpec):
    """Force kernel compilation with a zero-sweep call.

    Called once before fanning chains out to threads so compilation does
    not race or repeat.
    """
    kernel = _sweep_kernel_for(model)
    d = model.dimension
    n_p = model.parameter_count
    states = np.zeros((2, d))
    params = np.zeros(n_p)
    step_row = np.full(2, -1, dtype=np.int64)
    comp_col = np.full(d, -1, dtype=np.int64)
    values = np.zeros((0, 0))
    empty = np.zeros((0, 2 * d + n_p))
    kernel(
        states, params, model.dt, 1.0, 1.0, step_row, comp_col, values,
        np.full((2, d), 0.1), np.full(n_p, 0.1), empty, empty,
        np.zeros(0, np.int64), np.zeros(2 * d, np.int64),
        np.zeros((0, n_p), np.int64), 0,
        np.zeros((2, d)), np.zeros(n_p), np.zeros((2, d)), np.zeros(n_p),
        np.zeros((2, d)), np.zeros((2, d)), np.zeros(n_p), np.zeros(n_p),
    )
    return kernel


def _check_consistent(path: Path, model: ModelSpec):
    if path.dimension != model.dimension:
        raise ValueError(
            f"path dimension {path.dimension} does not match model dimension "
            f"{model.dimension}"
        )
    if path.params.size != model.parameter_count:
        raise ValueError(
            f"path has {path.params.size} params, model expects {model.parameter_count}"
        )


def sweep(
    path: Path,
    obs: ObservationSet,
    model: ModelSpec,
    R_f: float,
    steps,
    rng: np.random.Generator,
):
    """One full ordered pass of single-site proposals over a path.

    ``steps`` is (state_steps, param_steps): proposal scales for the state
    sites, either one shared scalar or one scale per site as an
    (N+1, D) array, and one scale per parameter. Returns (updated path,
    accepted count, proposed count); the input path is not modified.
    """
    if R_f < 0:
        raise ValueError(f"R_f must be >= 0, got {R_f}")
    _check_consistent(path, model)
    state_steps, param_steps = steps
    param_steps = np.ascontiguousarray(np.broadcast_to(param_steps, (path.params.size,)), dtype=np.float64)
    states = path.states.copy()
    params = path.params.copy()
    n_rows, d = states.shape
    n_p = params.size
    n_sites = n_rows * d + n_p
    state_steps = np.ascontiguousarray(
        np.broadcast_to(np.asarray(state_steps, dtype=np.float64), (n_rows, d))
    )
    step_row, comp_col = obs.dense_maps(n_rows - 1, d)
    kernel = _sweep_kernel_for(model)
    normals = rng.standard_normal((1, n_sites))
    uniforms = rng.random((1, n_sites))
    acc_state = np.zeros(1, np.int64)
    acc_site = np.zeros(n_rows * d, np.int64)
    acc_param = np.zeros((1, n_p), np.int64)
    zs = np.zeros((n_rows, d))
    zp = np.zeros(n_p)
    kernel(
        states, params, model.dt, float(R_f), float(obs.R_m),
        step_row, comp_col, obs.values,
        state_steps, param_steps, normals, uniforms,
        acc_state, acc_site, acc_param, 0,
        zs, zp, zs.copy(), zp.copy(), zs.copy(), zs.copy(), zp.copy(), zp.copy(),
    )
    accepted = int(acc_state[0] + acc_param[0].sum())
    return Path(states, params), accepted, n_sites


def run_chain(
    init: Path,
    obs: ObservationSet,
    model: ModelSpec,
    R_f: float,
    cfg: ChainConfig,
) -> ChainResult:
    """Burn in, adapt step scales, then sample and average the path.

    Burn-in runs in blocks of ``adapt_block`` sweeps, nudging the step
    scales after every full block: the shared state scale from the pooled
    acceptance rate, or each site's own scale from its own rate under
    ``per_site_steps``, and each parameter scale from its rate. Sampling
    runs with frozen scales and accumulates the snapshot mean, variance,
    and envelope selected by ``average_mode``.
    """
    if R_f < 0:
        raise ValueError(f"R_f must be >= 0, got {R_f}")
    _check_consistent(init, model)
    states = init.states.copy()
    params = init.params.copy()
    n_rows, d = states.shape
    n_p = params.size
    n_sites = n_rows * d + n_p
    n_state_sites = n_rows * d
    step_row, comp_col = obs.dense_maps(n_rows - 1, d)
    kernel = _sweep_kernel_for(model)
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    dt = model.dt
    r_f = float(R_f)
    r_m = float(obs.R_m)

    init_step = np.asarray(cfg.initial_step, dtype=np.float64)
    if init_step.ndim not in (0, 2):
        raise ValueError(f"initial_step must be a scalar or an (N+1, D) array, got shape {init_step.shape}")
    # shared mode with a scalar keeps the scale as a float and mirrors it
    # into the array the kernel reads, so adaptation arithmetic is
    # identical to a purely scalar implementation
    shared_scalar = init_step.ndim == 0 and not cfg.per_site_steps
    state_step = float(init_step) if init_step.ndim == 0 else 0.0
    try:
        state_steps = np.ascontiguousarray(np.broadcast_to(init_step, (n_rows, d))).copy()
    except ValueError:
        raise ValueError(
            f"initial_step shape {init_step.shape} does not broadcast to path shape ({n_rows}, {d})"
        ) from None
    # param_step may be a scalar or one scale per parameter
    param_steps = np.broadcast_to(
        np.asarray(cfg.param_step, dtype=np.float64), (n_p,)
    ).copy()

    sum_states = np.zeros((n_rows, d))
    sum_params = np.zeros(n_p)
    sumsq_states = np.zeros((n_rows, d))
    sumsq_params = np.zeros(n_p)
    min_states = np.full((n_rows, d), np.inf)
    max_states = np.full((n_rows, d), -np.inf)
    min_params = np.full(n_p, np.inf)
    max_params = np.full(n_p, -np.inf)

    def run_block(n_sweeps, record_mode):
        normals = rng.standard_normal((n_sweeps, n_sites))
        uniforms = rng.random((n_sweeps, n_sites))
        acc_state = np.zeros(n_sweeps, np.int64)
        acc_site = np.zeros(n_state_sites, np.int64)
        acc_param = np.zeros((n_sweeps, n_p), np.int64)
        snaps = kernel(
            states, params, dt, r_f, r_m, step_row, comp_col, obs.values,
            state_steps, param_steps, normals, uniforms,
            acc_state, acc_site, acc_param, record_mode,
            sum_states, sum_params, sumsq_states, sumsq_params,
            min_states, max_states, min_params, max_params,
        )
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(params))):
            raise ChainDivergenceError(
                f"non-finite path after a block of {n_sweeps} sweeps at R_f={r_f}"
            )
        return int(snaps), acc_state, acc_site, acc_param

    lo, hi = cfg.target_accept
    done = 0
    while done < cfg.burn_in_sweeps:
        block = min(cfg.adapt_block, cfg.burn_in_sweeps - done)
        _, acc_state, acc_site, acc_param = run_block(block, 0)
        done += block
        if block == cfg.adapt_block:
            if cfg.per_site_steps:
                site_rates = acc_site.reshape(n_rows, d) / block
                state_steps = np.where(
                    site_rates > hi,
                    state_steps * cfg.adapt_factor,
                    np.where(site_rates < lo, state_steps / cfg.adapt_factor, state_steps),
                )
            elif shared_scalar:
                rate = float(acc_state.sum()) / (block * n_state_sites)
                state_step = adapt_step(state_step, rate, cfg.target_accept, cfg.adapt_factor)
                state_steps[...] = state_step
            else:
                # shared adaptation of caller-supplied per-site scales:
                # one pooled rate rescales the whole array
                rate = float(acc_state.sum()) / (block * n_state_sites)
                if rate > hi:
                    state_steps = state_steps * cfg.adapt_factor
                elif rate < lo:
                    state_steps = state_steps / cfg.adapt_factor
            for j in range(n_p):
                p_rate = float(acc_param[:, j].sum()) / block
                param_steps[j] = adapt_step(
                    param_steps[j], p_rate, cfg.target_accept, cfg.adapt_factor
                )

    record_mode = 1 if cfg.average_mode == "per_sweep" else 2
    n_snap = 0
    n_accepted_proposals = 0
    done = 0
    while done < cfg.sample_sweeps:
        block = min(_SAMPLE_CHUNK, cfg.sample_sweeps - done)
        snaps, acc_state, _, acc_param = run_block(block, record_mode)
        n_snap += snaps
        n_accepted_proposals += int(acc_state.sum()) + int(acc_param.sum())
        done += block

    acceptance_rate = n_accepted_proposals / (cfg.sample_sweeps * n_sites)
    if n_snap > 0:
        mean_states = sum_states / n_snap
        mean_params = sum_params / n_snap
        var_states = np.maximum(sumsq_states / n_snap - mean_states**2, 0.0)
        var_params = np.maximum(sumsq_params / n_snap - mean_params**2, 0.0)
        snap_min, snap_max = min_states, max_states
        p_min, p_max = min_params, max_params
    else:
        # no sweep was recorded (accepted_only with zero accepting sweeps):
        # fall back to the final path so the result stays well defined
        mean_states = states.copy()
        mean_params = params.copy()
        var_states = np.zeros((n_rows, d))
        var_params = np.zeros(n_p)
        snap_min, snap_max = states.copy(), states.copy()
        p_min, p_max = params.copy(), params.copy()

    expected = Path(mean_states, mean_params)
    return ChainResult(
        expected_path=expected,
        n_accepted=n_snap,
        acceptance_rate=acceptance_rate,
        final_step=state_step if shared_scalar else state_steps.copy(),
        final_param_steps=param_steps,
        action_at_mean=action(expected, obs, model, r_f),
        path_variance=var_states,
        param_variance=var_params,
        snapshot_min=snap_min,
        snapshot_max=snap_max,
        param_min=p_min,
        param_max=p_max,
    )
