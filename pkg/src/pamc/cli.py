"""Command-line pipeline: generate twin data, assimilate, predict.

Each subcommand reads one config file and writes CSV tables plus a
``meta.json`` holding the fully resolved config, so any output directory
is self-describing and can be re-run exactly: ``meta.json`` itself is a
valid ``--config``.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure (overflow or a diverged chain).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .annealer import InitRanges, min_action_index, pamc_run
from .config import RunConfig, load_config, parse_config
from .errors import ChainDivergenceError, ConfigError, IntegrationOverflowError
from .tables import (
    ACTIONS_HEADER,
    DATA_HEADER,
    MEAN_PATH_Q,
    PARAMS_HEADER,
    TableWriter,
    action_row,
    data_rows,
    est_path_rows,
    param_row,
    read_actions,
    read_est_paths,
    read_observations,
    read_params,
    state_header,
    trajectory_rows,
    write_table,
)
from .twin import generate_twin, predict


def _resolve(config) -> RunConfig:
    if isinstance(config, RunConfig):
        return config
    return load_config(config)


def _apply_overrides(cfg: RunConfig, out_dir=None, seed=None, threads=None) -> RunConfig:
    raw = cfg.resolved()
    if out_dir is not None:
        raw["output_dir"] = str(out_dir)
    if seed is not None:
        raw["seed"] = int(seed)
    if threads is not None:
        raw["threads"] = int(threads)
    return parse_config(raw)


def _prepare_outdir(cfg: RunConfig) -> str:
    out = cfg.output_dir
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    return out


def write_meta(cfg: RunConfig, out_dir: str, command: str):
    meta = cfg.resolved()
    meta["_meta"] = {
        "version": __version__,
        "run_id": cfg.run_id(),
        "command": command,
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _effective_threads(cfg: RunConfig) -> int:
    if cfg.threads == 0:
        return os.cpu_count() or 1
    return cfg.threads


def cmd_generate(config, out_dir=None, seed=None, write_meta_file=True) -> str:
    """Simulate the twin and write data.csv, truth.csv, and meta.json."""
    cfg = _apply_overrides(_resolve(config), out_dir=out_dir, seed=seed)
    out = _prepare_outdir(cfg)
    if write_meta_file:
        write_meta(cfg, out, "generate")
    data = generate_twin(cfg.twin)
    obs = data.observations
    write_table(
        os.path.join(out, "data.csv"), DATA_HEADER,
        data_rows(data.truth, obs.obs_steps, obs.obs_components, obs.values,
                  cfg.dt),
    )
    write_table(
        os.path.join(out, "truth.csv"),
        ["step", "time", *state_header(cfg.dimension)],
        trajectory_rows(data.truth, cfg.dt),
    )
    return out


def cmd_assimilate(config, data_path=None, out_dir=None, seed=None,
                   threads=None, write_meta_file=True) -> str:
    """Run the annealing ladder on data.csv and write the level tables.

    actions.csv and params.csv are flushed after every rung, so a run
    aborted by a diverged chain leaves all completed rungs on disk.
    """
    cfg = _apply_overrides(_resolve(config), out_dir=out_dir, seed=seed,
                           threads=threads)
    out = _prepare_outdir(cfg)
    if data_path is None:
        data_path = os.path.join(out, "data.csv")
    obs = read_observations(data_path, R_m=cfg.twin.R_m)

    d = cfg.dimension
    n_trans = cfg.twin.window_steps
    comps = tuple(int(a) for a in obs.obs_components)
    if comps != cfg.twin.obs_components:
        raise ConfigError(
            f"{data_path} observes components {comps}, config says "
            f"{cfg.twin.obs_components}"
        )
    if int(obs.obs_steps.max()) > n_trans:
        raise ConfigError(
            f"{data_path} observes step {int(obs.obs_steps.max())}, beyond "
            f"the window of {n_trans} steps"
        )

    if write_meta_file:
        write_meta(cfg, out, "assimilate")
    model = cfg.model()
    ranges = InitRanges.from_observations(obs, d, param_ranges=cfg.parameter_ranges)

    actions = TableWriter(os.path.join(out, "actions.csv"), ACTIONS_HEADER)
    params = TableWriter(os.path.join(out, "params.csv"), PARAMS_HEADER)

    def flush_rung(beta, rows, paths):
        actions.append(action_row(r) for r in rows)
        params.append(param_row(r) for r in rows)

    try:
        record = pamc_run(
            obs, model, cfg.schedule, cfg.chain, ranges, cfg.seed, n_trans,
            threads=_effective_threads(cfg), on_rung=flush_rung,
        )
    finally:
        actions.close()
        params.close()

    write_table(
        os.path.join(out, "est_path.csv"),
        ["q", "step", "time", *state_header(d)],
        est_path_rows(record.final_paths, cfg.dt),
    )
    return out


def cmd_predict(config, est_path=None, out_dir=None, write_meta_file=True) -> str:
    """Integrate forward from the minimum-action estimate, write prediction.csv.

    ``est_path`` is either the run directory or its est_path.csv;
    actions.csv and params.csv are read from the same directory to pick
    the minimum-action chain and its parameter estimate.
    """
    cfg = _apply_overrides(_resolve(config), out_dir=out_dir)
    out = _prepare_outdir(cfg)
    if est_path is None:
        est_path = out
    est_dir = est_path if os.path.isdir(est_path) else os.path.dirname(est_path) or "."
    est_file = (os.path.join(est_path, "est_path.csv")
                if os.path.isdir(est_path) else est_path)

    paths = read_est_paths(est_file)
    action_rows = read_actions(os.path.join(est_dir, "actions.csv"))
    param_rows = read_params(os.path.join(est_dir, "params.csv"))
    beta_top = max(r["beta"] for r in action_rows)
    top = [r for r in action_rows if r["beta"] == beta_top]
    q_star = min(top, key=lambda r: r["action"])["q"]
    nu = [r["nu_est"] for r in param_rows
          if r["beta"] == beta_top and r["q"] == q_star]
    if q_star not in paths or len(nu) != 1:
        raise ConfigError(
            f"estimate tables disagree: no unique path/parameter for chain "
            f"{q_star} at rung {beta_top}"
        )

    states = paths[q_star]
    n_trans = cfg.twin.window_steps
    if states.shape != (n_trans + 1, cfg.dimension):
        raise ConfigError(
            f"{est_file}: chain {q_star} path has shape {states.shape}, "
            f"config expects {(n_trans + 1, cfg.dimension)}"
        )
    traj = predict(states[-1], np.array([nu[0]]), cfg.twin.prediction_steps,
                   cfg.model())
    if write_meta_file:
        write_meta(cfg, out, "predict")
    write_table(
        os.path.join(out, "prediction.csv"),
        ["step", "time", *state_header(cfg.dimension)],
        trajectory_rows(traj, cfg.dt, start_step=n_trans),
    )
    return out


def cmd_twin(config, out_dir=None, seed=None, threads=None) -> str:
    """Generate, assimilate, and predict in one output directory."""
    cfg = _apply_overrides(_resolve(config), out_dir=out_dir, seed=seed,
                           threads=threads)
    out = _prepare_outdir(cfg)
    write_meta(cfg, out, "twin")
    cmd_generate(cfg, write_meta_file=False)
    cmd_assimilate(cfg, write_meta_file=False)
    cmd_predict(cfg, write_meta_file=False)
    return out


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this pipeline reserves 2 for
    # numerical failures, so usage errors are remapped to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pamc", description="Precision-annealed path sampling pipeline")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    specs = {
        "generate": "simulate a twin experiment and write its observations",
        "assimilate": "run the annealing ladder on generated data",
        "predict": "integrate forward from the minimum-action estimate",
        "twin": "generate, assimilate, and predict in one go",
    }
    for name, help_text in specs.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="run config (YAML or meta.json)")
        sp.add_argument("--out", help="output directory (overrides config)")
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        if name in ("assimilate", "twin"):
            sp.add_argument("--threads", type=int,
                            help="chain thread pool size (overrides config)")
        if name == "assimilate":
            sp.add_argument("--data", help="observations CSV (default: out dir's data.csv)")
        if name == "predict":
            sp.add_argument("--data", help="est_path.csv or the run directory holding it")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            out = cmd_generate(args.config, out_dir=args.out, seed=args.seed)
        elif args.command == "assimilate":
            out = cmd_assimilate(args.config, data_path=args.data,
                                 out_dir=args.out, seed=args.seed,
                                 threads=args.threads)
        elif args.command == "predict":
            out = cmd_predict(args.config, est_path=args.data, out_dir=args.out)
        else:
            out = cmd_twin(args.config, out_dir=args.out, seed=args.seed,
                           threads=args.threads)
    except ConfigError as exc:
        print(f"pamc: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"pamc: i/o error: {exc}", file=sys.stderr)
        return 1
    except (IntegrationOverflowError, ChainDivergenceError) as exc:
        print(f"pamc: numerical failure: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
