"""Diagnostic figures for annealed path-sampling runs.

This package is a read-only consumer of the CSV files a run writes
(actions.csv, params.csv, truth.csv, est_path.csv, prediction.csv): it
never imports the sampler and never modifies an input. Each figure kind
has a builder returning a matplotlib Figure and a command-line entry
point that saves it as a PNG of fixed pixel dimensions.
"""

from .figures import plot_action_levels, plot_param, plot_timeseries
from .io import PlotDataError, resolve_run_id

__version__ = "0.1.0"

__all__ = [
    "plot_action_levels",
    "plot_param",
    "plot_timeseries",
    "PlotDataError",
    "resolve_run_id",
    "__version__",
]
