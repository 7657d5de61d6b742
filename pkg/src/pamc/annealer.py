"""Precision-annealed path sampling across a ladder of model precisions.

The model-error precision is raised geometrically, R_f = R_f0 * alpha^beta
for beta = 0..beta_max. At beta = 0 each of N_I chains starts from a
zero-action path: states drawn uniformly, integrated forward with observed
components overwritten by the data, so the action is exactly zero where
the model term has no weight. At each later rung, chain q starts from its
own expected path from the rung below. Raising the precision slowly lets
the chains track the sharpening action surface instead of freezing into
whatever basin a cold start would land in.

After the last rung, estimates are means over the N_I expected paths; the
minimum-action path is reported alongside for comparison.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .action import ObservationSet, Path
from .dynamics import ModelSpec
from .errors import ChainDivergenceError, IntegrationOverflowError
from .sampler import ChainConfig, _compile_kernel, run_chain

__all__ = [
    "AnnealSchedule",
    "InitRanges",
    "RunRecordRow",
    "RunRecord",
    "init_paths",
    "pamc_run",
    "expected_value",
    "plateau_diagnostic",
    "min_action_index",
    "min_action_path",
]

_INIT_RETRIES = 20


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric precision ladder plus the chain ensemble size."""

    R_f0: float = 1.0
    alpha: float = 1.4
    beta_max: int = 55
    N_I: int = 50

    def __post_init__(self):
        if self.R_f0 <= 0:
            raise ValueError(f"R_f0 must be > 0, got {self.R_f0}")
        if self.alpha <= 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if self.beta_max < 0:
            raise ValueError(f"beta_max must be >= 0, got {self.beta_max}")
        if self.N_I < 1:
            raise ValueError(f"N_I must be >= 1, got {self.N_I}")

    def precision_at(self, beta: int) -> float:
        return self.R_f0 * self.alpha**beta


@dataclass(frozen=True)
class InitRanges:
    """Uniform draw intervals for initial states and parameters.

    ``state_ranges`` has shape (D, 2) and ``param_ranges`` (N_p, 2), each
    row a [low, high] interval.
    """

    state_ranges: np.ndarray
    param_ranges: np.ndarray

    def __post_init__(self):
        sr = np.asarray(self.state_ranges, dtype=np.float64)
        pr = np.asarray(self.param_ranges, dtype=np.float64)
        if sr.ndim != 2 or sr.shape[1] != 2:
            raise ValueError(f"state_ranges must be (D, 2), got {sr.shape}")
        if pr.ndim != 2 or (pr.size and pr.shape[1] != 2):
            raise ValueError(f"param_ranges must be (N_p, 2), got {pr.shape}")
        if not (np.all(np.isfinite(sr)) and np.all(np.isfinite(pr))):
            raise ValueError("draw intervals must be finite")
        if np.any(sr[:, 0] > sr[:, 1]) or (pr.size and np.any(pr[:, 0] > pr[:, 1])):
            raise ValueError("draw intervals must have low <= high")
        object.__setattr__(self, "state_ranges", sr)
        object.__setattr__(self, "param_ranges", pr.reshape(-1, 2))

    @classmethod
    def from_observations(
        cls,
        obs: ObservationSet,
        dimension: int,
        param_ranges=None,
        pad: float = 0.1,
    ) -> "InitRanges":
        """Infer state draw intervals from the spread of the data.

        Every component, observed or not, gets the same interval: the data
        range padded by ``pad`` times its span. For a cyclically coupled
        model the components are statistically alike, so the observed
        spread is a fair prior for the unobserved ones too. ``param_ranges``
        defaults to [4, 12] per parameter, a broad bracket around typical
        forcing values.
        """
        if obs.values.size == 0:
            raise ValueError("cannot infer draw intervals from an empty observation set")
        lo = float(np.min(obs.values))
        hi = float(np.max(obs.values))
        span = hi - lo
        interval = (lo - pad * span, hi + pad * span)
        state_ranges = np.tile(interval, (dimension, 1))
        if param_ranges is None:
            param_ranges = np.empty((0, 2))
        return cls(state_ranges=state_ranges, param_ranges=np.asarray(param_ranges, dtype=np.float64).reshape(-1, 2))


@dataclass(frozen=True)
class RunRecordRow:
    """Per-(q, beta) summary: action breakdown and estimates at X-bar."""

    q: int
    beta: int
    R_f: float
    action_total: float
    measurement_error: float
    model_error: float
    params: np.ndarray
    acceptance_rate: float
    n_accepted: int


@dataclass
class RunRecord:
    """Everything a run produces: the level table and the final paths.

    ``rows`` is ordered rung-major (all q at beta, then beta+1) with
    exactly N_I * (beta_max + 1) entries. ``final_paths`` holds the N_I
    expected paths at the last rung, in q order.
    """

    schedule: AnnealSchedule
    rows: list = field(default_factory=list)
    final_paths: list = field(default_factory=list)

    def rows_at(self, beta: int) -> list:
        return [r for r in self.rows if r.beta == beta]


def init_paths(
    obs: ObservationSet,
    model: ModelSpec,
    N_I: int,
    ranges: InitRanges,
    rng: np.random.Generator,
    n_transitions: int,
) -> list:
    """Build N_I paths whose action is exactly zero at R_f = 0.

    Each path draws x(0) and parameters uniformly from ``ranges``, then
    integrates forward; at every observed step the observed components are
    overwritten with the data before the map is applied, and once more at
    the end, so the measurement error vanishes identically. Unobserved
    components differ between paths; observed ones agree.

    A path that overflows during integration (a bad parameter draw on a
    chaotic model) is redrawn, up to a bounded number of attempts.
    """
    d = model.dimension
    if ranges.state_ranges.shape[0] != d:
        raise ValueError(
            f"ranges cover {ranges.state_ranges.shape[0]} components, model has {d}"
        )
    if ranges.param_ranges.shape[0] != model.parameter_count:
        raise ValueError(
            f"ranges cover {ranges.param_ranges.shape[0]} params, "
            f"model has {model.parameter_count}"
        )
    step_row, comp_col = obs.dense_maps(n_transitions, d)
    comps = obs.obs_components
    paths = []
    for q in range(N_I):
        for attempt in range(_INIT_RETRIES):
            x0 = rng.uniform(ranges.state_ranges[:, 0], ranges.state_ranges[:, 1])
            params = rng.uniform(ranges.param_ranges[:, 0], ranges.param_ranges[:, 1])
            states = np.empty((n_transitions + 1, d))
            states[0] = x0
            try:
                for n in range(n_transitions):
                    if step_row[n] >= 0:
                        states[n, comps] = obs.values[step_row[n]]
                    states[n + 1] = model.step(states[n], params)
            except IntegrationOverflowError:
                continue
            for k, n in enumerate(obs.obs_steps):
                states[n, comps] = obs.values[k]
            paths.append(Path(states, params))
            break
        else:
            raise IntegrationOverflowError(
                f"initial path {q} overflowed in {_INIT_RETRIES} consecutive draws",
                step_index=0,
            )
    return paths


def _chain_seed(master: int, q: int, beta: int) -> int:
    ss = np.random.SeedSequence([master, 3, q, beta])
    return int(ss.generate_state(1, np.uint64)[0])


def pamc_run(
    obs: ObservationSet,
    model: ModelSpec,
    schedule: AnnealSchedule,
    chain_cfg: ChainConfig,
    ranges: InitRanges,
    rng,
    n_transitions: int,
    threads: int = 1,
    carry_steps: bool = True,
    per_beta: dict | None = None,
    on_rung: Callable | None = None,
) -> RunRecord:
    """Run the full annealing ladder and record every level.

    ``rng`` is either an integer master seed or a Generator from which one
    is drawn; all chain seeds derive from it deterministically, so results
    are bit-identical for a given seed regardless of ``threads``. Within a
    rung the N_I chains are independent and may run concurrently; a rung
    is a barrier, since rung beta+1 consumes the expected paths of rung
    beta.

    With ``carry_steps`` each chain's adapted step scales seed its own
    chain at the next rung, so the proposals keep tracking the action
    surface as it sharpens; a fresh-start override can be given per rung
    through ``per_beta`` (a {beta: {field: value}} table of ChainConfig
    replacements).

    ``on_rung``, if given, is called as on_rung(beta, rows, paths) after
    each rung completes, with that rung's N_I record rows and expected
    paths; callers use it to flush results incrementally so an aborted
    run still leaves the finished rungs on disk.
    """
    if isinstance(rng, (int, np.integer)):
        master = int(rng)
    else:
        master = int(rng.integers(0, 2**63))
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    per_beta = per_beta or {}

    init_rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([master, 2])))
    paths = init_paths(obs, model, schedule.N_I, ranges, init_rng, n_transitions)
    _compile_kernel(model)

    n_i = schedule.N_I
    state_steps = [chain_cfg.initial_step] * n_i
    param_steps = [chain_cfg.param_step] * n_i
    record = RunRecord(schedule=schedule)

    pool = None
    if threads > 1:
        pool = concurrent.futures.ThreadPoolExecutor(max_workers=threads)
    try:
        for beta in range(schedule.beta_max + 1):
            r_f = schedule.precision_at(beta)
            overrides = dict(per_beta.get(beta, {}))
            overrides.pop("rng_seed", None)
            cfgs = []
            for q in range(n_i):
                cfg = replace(chain_cfg, **overrides) if overrides else chain_cfg
                if carry_steps and beta > 0:
                    if "initial_step" not in overrides:
                        cfg = replace(cfg, initial_step=state_steps[q])
                    if "param_step" not in overrides:
                        cfg = replace(cfg, param_step=param_steps[q])
                cfgs.append(replace(cfg, rng_seed=_chain_seed(master, q, beta)))

            def job(q):
                try:
                    return run_chain(paths[q], obs, model, r_f, cfgs[q])
                except ChainDivergenceError as exc:
                    raise ChainDivergenceError(
                        f"chain q={q} at rung beta={beta}: {exc}"
                    ) from exc

            if pool is not None:
                results = list(pool.map(job, range(n_i)))
            else:
                results = [job(q) for q in range(n_i)]

            rung_rows = []
            for q, res in enumerate(results):
                breakdown = res.action_at_mean
                rung_rows.append(
                    RunRecordRow(
                        q=q,
                        beta=beta,
                        R_f=r_f,
                        action_total=breakdown.total,
                        measurement_error=breakdown.measurement_error,
                        model_error=breakdown.model_error,
                        params=res.expected_path.params.copy(),
                        acceptance_rate=res.acceptance_rate,
                        n_accepted=res.n_accepted,
                    )
                )
            record.rows.extend(rung_rows)
            paths = [res.expected_path for res in results]
            if carry_steps:
                state_steps = [res.final_step for res in results]
                param_steps = [res.final_param_steps for res in results]
            if on_rung is not None:
                on_rung(beta, rung_rows, paths)
    finally:
        if pool is not None:
            pool.shutdown()

    record.final_paths = paths
    return record


def expected_value(G: Callable, record: RunRecord):
    """Average a path functional over the N_I final expected paths.

    G maps a Path to a scalar, an array, or a Path; the mean is taken
    elementwise. With G the identity this is the ensemble-mean path; with
    a parameter extractor it is the parameter estimate.
    """
    if not record.final_paths:
        raise ValueError("record holds no final paths")
    vals = [G(p) for p in record.final_paths]
    if isinstance(vals[0], Path):
        states = sum(v.states for v in vals) / len(vals)
        params = sum(v.params for v in vals) / len(vals)
        return Path(states, params)
    return sum(np.asarray(v, dtype=np.float64) for v in vals) / len(vals)


def _min_action_series(record: RunRecord) -> np.ndarray:
    betas = range(record.schedule.beta_max + 1)
    return np.array([min(r.action_total for r in record.rows_at(b)) for b in betas])


def plateau_diagnostic(record: RunRecord, window: int = 10, tol: float = 0.01):
    """Whether the minimum action level has flattened near the top rung.

    Looks at the per-rung minimum action over the last ``window`` rungs
    and reports (flat, relative_change), where relative_change is the
    spread of that series over its final value. Reported only; never used
    to stop a run early.
    """
    series = _min_action_series(record)[-window:]
    ref = abs(series[-1])
    if ref == 0.0:
        rel = 0.0 if np.all(series == 0.0) else np.inf
    else:
        rel = float((series.max() - series.min()) / ref)
    return bool(rel < tol), rel


def min_action_index(record: RunRecord, beta: int | None = None) -> int:
    """The q whose expected path has the lowest action at a rung."""
    if beta is None:
        beta = record.schedule.beta_max
    rows = record.rows_at(beta)
    if not rows:
        raise ValueError(f"no rows at beta={beta}")
    return min(rows, key=lambda r: r.action_total).q


def min_action_path(record: RunRecord) -> Path:
    """The final expected path with the lowest action at the top rung."""
    return record.final_paths[min_action_index(record)]
