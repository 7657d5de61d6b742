"""Run configuration: one YAML file with four sections, fully resolved.

The file carries ``model``, ``twin``, ``schedule``, and ``chain`` sections
plus ``output_dir``, ``seed``, and ``threads`` at the top level.  Every key
has a documented default except ``twin.sigma``, which must be stated, and
``twin.obs_components``, which defaults to the reference 12-of-20 set only
when the model dimension is 20.  Unknown keys are a hard error: a typo in a
hyperparameter name must not silently fall back to a default.

A resolved copy of the config is persisted as ``meta.json`` next to the
results.  JSON is a YAML subset, so meta.json can be fed back in as the
``--config`` of a new run to reproduce it; the extra ``_meta`` block is
ignored on load.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np
import yaml

from .annealer import AnnealSchedule
from .errors import ConfigError
from .sampler import ChainConfig
from .twin import DEFAULT_OBSERVED, TwinConfig

_MODEL_KEYS = {"name", "dimension", "dt", "parameter_ranges"}
_TWIN_KEYS = {
    "sigma", "nu_true", "window_steps", "n_tau", "obs_components",
    "prediction_steps", "transient_steps", "R_m",
}
_SCHEDULE_KEYS = {"R_f0", "alpha", "beta_max", "N_I"}
_CHAIN_KEYS = {
    "burn_in_sweeps", "sample_sweeps", "initial_step", "param_step",
    "target_accept", "adapt_factor", "adapt_block", "average_mode",
    "per_site_steps",
}
_TOP_KEYS = {"model", "twin", "schedule", "chain", "output_dir", "seed",
             "threads", "_meta"}

_MODEL_DEFAULTS = {
    "name": "lorenz96",
    "dimension": 20,
    "dt": 0.025,
    "parameter_ranges": [[4.0, 12.0]],
}
_TWIN_DEFAULTS = {
    "nu_true": 8.17,
    "window_steps": 200,
    "n_tau": 1,
    "prediction_steps": 200,
    "transient_steps": 2000,
    "R_m": 1.0,
}
_SCHEDULE_DEFAULTS = {"R_f0": 1.0, "alpha": 1.4, "beta_max": 55, "N_I": 50}
_CHAIN_DEFAULTS = {
    "burn_in_sweeps": 500,
    "sample_sweeps": 1000,
    "initial_step": 0.1,
    "param_step": 0.05,
    "target_accept": [0.2, 0.5],
    "adapt_factor": 1.1,
    "adapt_block": 25,
    "average_mode": "per_sweep",
    "per_site_steps": False,
}


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run setup: every knob explicit."""

    model_name: str
    parameter_ranges: np.ndarray
    twin: TwinConfig
    schedule: AnnealSchedule
    chain: ChainConfig
    output_dir: str
    seed: int
    threads: int

    @property
    def dimension(self) -> int:
        return self.twin.dimension

    @property
    def dt(self) -> float:
        return self.twin.dt

    def model(self):
        return self.twin.model()

    def resolved(self) -> dict:
        """The config as a plain dict, loadable again by load_config."""
        tw = self.twin
        ch = self.chain
        sc = self.schedule
        return {
            "model": {
                "name": self.model_name,
                "dimension": tw.dimension,
                "dt": tw.dt,
                "parameter_ranges": self.parameter_ranges.tolist(),
            },
            "twin": {
                "sigma": tw.sigma,
                "nu_true": tw.nu_true,
                "window_steps": tw.window_steps,
                "n_tau": tw.n_tau,
                "obs_components": list(tw.obs_components),
                "prediction_steps": tw.prediction_steps,
                "transient_steps": tw.transient_steps,
                "R_m": tw.R_m,
            },
            "schedule": {
                "R_f0": sc.R_f0,
                "alpha": sc.alpha,
                "beta_max": sc.beta_max,
                "N_I": sc.N_I,
            },
            "chain": {
                "burn_in_sweeps": ch.burn_in_sweeps,
                "sample_sweeps": ch.sample_sweeps,
                "initial_step": ch.initial_step,
                "param_step": float(np.asarray(ch.param_step).ravel()[0])
                if np.asarray(ch.param_step).size == 1
                else np.asarray(ch.param_step).tolist(),
                "target_accept": list(ch.target_accept),
                "adapt_factor": ch.adapt_factor,
                "adapt_block": ch.adapt_block,
                "average_mode": ch.average_mode,
                "per_site_steps": ch.per_site_steps,
            },
            "output_dir": self.output_dir,
            "seed": self.seed,
            "threads": self.threads,
        }

    def run_id(self) -> str:
        """Short content hash of the resolved config."""
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _check_keys(section: str, given: dict, allowed: set):
    unknown = sorted(set(given) - allowed)
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {section}: {', '.join(unknown)}; "
            f"allowed: {', '.join(sorted(allowed))}"
        )


def _section(raw: dict, name: str) -> dict:
    sec = raw.get(name, {})
    if sec is None:
        sec = {}
    if not isinstance(sec, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    return dict(sec)


def parse_config(raw: dict) -> RunConfig:
    """Validate and resolve a raw config mapping into a RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys("top level", raw, _TOP_KEYS)
    model = _section(raw, "model")
    twin = _section(raw, "twin")
    schedule = _section(raw, "schedule")
    chain = _section(raw, "chain")
    _check_keys("model", model, _MODEL_KEYS)
    _check_keys("twin", twin, _TWIN_KEYS)
    _check_keys("schedule", schedule, _SCHEDULE_KEYS)
    _check_keys("chain", chain, _CHAIN_KEYS)

    model = {**_MODEL_DEFAULTS, **model}
    twin = {**_TWIN_DEFAULTS, **twin}
    schedule = {**_SCHEDULE_DEFAULTS, **schedule}
    chain = {**_CHAIN_DEFAULTS, **chain}

    if model["name"] != "lorenz96":
        raise ConfigError(f"unsupported model name: {model['name']!r}")
    if "sigma" not in twin:
        raise ConfigError("twin.sigma is required: the noise level governs "
                          "every result and has no safe default")
    dimension = int(model["dimension"])
    if "obs_components" not in twin:
        if dimension == 20:
            twin["obs_components"] = list(DEFAULT_OBSERVED)
        else:
            raise ConfigError(
                "twin.obs_components is required when model.dimension != 20"
            )

    per_site = chain["per_site_steps"]
    if not isinstance(per_site, bool):
        raise ConfigError(f"chain.per_site_steps must be true or false, got {per_site!r}")

    try:
        parameter_ranges = np.asarray(model["parameter_ranges"],
                                      dtype=np.float64).reshape(-1, 2)
        twin_cfg = TwinConfig(
            sigma=float(twin["sigma"]),
            dimension=dimension,
            nu_true=float(twin["nu_true"]),
            dt=float(model["dt"]),
            window_steps=int(twin["window_steps"]),
            n_tau=int(twin["n_tau"]),
            obs_components=tuple(int(a) for a in twin["obs_components"]),
            prediction_steps=int(twin["prediction_steps"]),
            transient_steps=int(twin["transient_steps"]),
            R_m=float(twin["R_m"]),
            seed=int(raw.get("seed", 0)),
        )
        schedule_cfg = AnnealSchedule(
            R_f0=float(schedule["R_f0"]),
            alpha=float(schedule["alpha"]),
            beta_max=int(schedule["beta_max"]),
            N_I=int(schedule["N_I"]),
        )
        param_step = chain["param_step"]
        param_step = (float(param_step) if np.isscalar(param_step)
                      else np.asarray(param_step, dtype=np.float64))
        chain_cfg = ChainConfig(
            burn_in_sweeps=int(chain["burn_in_sweeps"]),
            sample_sweeps=int(chain["sample_sweeps"]),
            initial_step=float(chain["initial_step"]),
            param_step=param_step,
            target_accept=tuple(float(v) for v in chain["target_accept"]),
            adapt_factor=float(chain["adapt_factor"]),
            adapt_block=int(chain["adapt_block"]),
            average_mode=str(chain["average_mode"]),
            per_site_steps=per_site,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc

    if parameter_ranges.shape[0] != 1:
        raise ConfigError("lorenz96 has exactly one parameter; "
                          "model.parameter_ranges must hold one [low, high]")

    threads = int(raw.get("threads", 0))
    if threads < 0:
        raise ConfigError(f"threads must be >= 0, got {threads}")
    return RunConfig(
        model_name=str(model["name"]),
        parameter_ranges=parameter_ranges,
        twin=twin_cfg,
        schedule=schedule_cfg,
        chain=chain_cfg,
        output_dir=str(raw.get("output_dir", "runs/out")),
        seed=int(raw.get("seed", 0)),
        threads=threads,
    )


def load_config(path: str) -> RunConfig:
    """Load and resolve a config file (YAML, or a meta.json written by us)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if raw is None:
        raise ConfigError(f"config {path} is empty")
    return parse_config(raw)
