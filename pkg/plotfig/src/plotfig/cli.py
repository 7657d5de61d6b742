"""Entry points: one command per figure kind, shared flags.

Each command reads its CSVs, builds the figure, and saves a PNG. The
output path defaults to a deterministic name next to the first input.
Exit codes: 0 success, 1 for anything wrong (usage, missing or malformed
input, unwritable output). No image file is created on failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import figures, io


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; these tools promise 0/1
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_shared(parser: _Parser):
    parser.add_argument("--out", help="output PNG path (default: a fixed "
                        "name next to the first input file)")
    parser.add_argument("--meta", help="meta.json carrying the run id "
                        "(default: meta.json next to the first input file)")


def _save(fig, out_path) -> int:
    import matplotlib.pyplot as plt

    out = Path(out_path)
    try:
        fig.savefig(out)
    except OSError as exc:
        print(f"cannot write {out}: {exc}", file=sys.stderr)
        return 1
    finally:
        plt.close(fig)
    print(out)
    return 0


def _run(build, default_name: str, first_input: str, args) -> int:
    try:
        run_id = io.resolve_run_id(args.meta, first_input)
        fig = build(run_id)
    except io.PlotDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = args.out or str(Path(first_input).parent / default_name)
    return _save(fig, out)


def main_action_levels(argv=None) -> int:
    parser = _Parser(prog="plot-action-levels",
                     description="Action of every chain at every rung, log "
                                 "scale, with mean error components overlaid.")
    parser.add_argument("actions_csv")
    _add_shared(parser)
    args = parser.parse_args(argv)

    def build(run_id):
        return figures.plot_action_levels(io.read_actions(args.actions_csv), run_id)

    return _run(build, "action_levels.png", args.actions_csv, args)


def main_param(argv=None) -> int:
    parser = _Parser(prog="plot-param",
                     description="Parameter estimates against the rung.")
    parser.add_argument("params_csv")
    parser.add_argument("--mode", choices=("scatter", "mean_std"),
                        default="scatter")
    _add_shared(parser)
    args = parser.parse_args(argv)

    def build(run_id):
        return figures.plot_param(io.read_params(args.params_csv), run_id,
                                  mode=args.mode)

    return _run(build, f"param_{args.mode}.png", args.params_csv, args)


def main_timeseries(argv=None) -> int:
    parser = _Parser(prog="plot-timeseries",
                     description="Truth, window estimate, and prediction "
                                 "for one state component.")
    parser.add_argument("truth_csv")
    parser.add_argument("est_path_csv")
    parser.add_argument("prediction_csv")
    parser.add_argument("--component", type=int, required=True)
    _add_shared(parser)
    args = parser.parse_args(argv)

    def build(run_id):
        return figures.plot_timeseries(
            io.read_trajectory(args.truth_csv),
            io.read_est_paths(args.est_path_csv),
            io.read_trajectory(args.prediction_csv, allow_empty=True),
            args.component,
            run_id,
        )

    return _run(build, f"timeseries_x{args.component}.png", args.truth_csv, args)
