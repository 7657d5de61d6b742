"""Figure builders: one function per figure kind.

Every builder returns a matplotlib Figure of the same fixed size, with
the run identifier in the footer, so regenerated figures always have
identical pixel dimensions and a traceable origin. Builders never write
files; saving is the entry points' job, and it only happens after the
figure was built successfully.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import PlotDataError

FIGSIZE = (8.0, 5.0)
DPI = 150


def _new_figure(run_id: str):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    fig.text(0.99, 0.01, f"run {run_id}", ha="right", va="bottom",
             fontsize=7, color="0.45")
    return fig, ax


def _per_beta_mean(betas, values):
    levels = np.unique(betas)
    means = np.array([values[betas == b].mean() for b in levels])
    return levels, means


def plot_action_levels(actions: np.ndarray, run_id: str):
    """Action of every chain at every rung, with the error split.

    One dot per (chain, rung) on a log scale: flattening, separated
    levels signal a dominant probability peak. The per-rung mean
    measurement and model error components are overlaid, showing which
    term carries the action as the model precision rises.
    """
    beta, action = actions[:, 0], actions[:, 3]
    meas, model = actions[:, 4], actions[:, 5]
    fig, ax = _new_figure(run_id)
    ax.scatter(beta, action, s=10, color="black", alpha=0.55, linewidths=0,
               label="action, one chain each")
    levels, mean_meas = _per_beta_mean(beta, meas)
    _, mean_model = _per_beta_mean(beta, model)
    ax.plot(levels, mean_meas, color="tab:green", lw=1.6, label="measurement error (mean)")
    ax.plot(levels, mean_model, color="tab:red", lw=1.6, label="model error (mean)")
    ax.set_yscale("log")
    ax.set_xlabel(r"annealing rung $\beta$")
    ax.set_ylabel("action")
    ax.set_title("Action levels across the precision ladder")
    ax.legend(frameon=False, fontsize=9)
    return fig


def plot_param(params: np.ndarray, run_id: str, mode: str = "scatter"):
    """Parameter estimates against the rung: raw scatter or mean with band."""
    if mode not in ("scatter", "mean_std"):
        raise PlotDataError(f"mode must be scatter or mean_std, got {mode!r}")
    beta, nu = params[:, 0], params[:, 2]
    fig, ax = _new_figure(run_id)
    if mode == "scatter":
        ax.scatter(beta, nu, s=10, color="black", alpha=0.55, linewidths=0,
                   label="one chain each")
    else:
        levels = np.unique(beta)
        mean = np.array([nu[beta == b].mean() for b in levels])
        std = np.array([nu[beta == b].std() for b in levels])
        ax.plot(levels, mean, color="black", lw=1.6, label="ensemble mean")
        ax.fill_between(levels, mean - std, mean + std, color="black",
                        alpha=0.18, linewidth=0, label="one standard deviation")
    ax.set_xlabel(r"annealing rung $\beta$")
    ax.set_ylabel(r"forcing estimate $\nu$")
    ax.set_title("Parameter estimate across the precision ladder")
    ax.legend(frameon=False, fontsize=9)
    return fig


def plot_timeseries(truth, est, prediction, component: int, run_id: str):
    """One component: truth, window estimate, and forward prediction.

    Truth in black over the whole span, the estimated path in red over
    the observation window, the prediction in blue beyond it, and a
    dashed rule at the window end. A zero-length prediction gives a
    window-only figure.
    """
    t_truth, x_truth = truth
    t_est, x_est = est
    t_pred, x_pred = prediction
    d = x_truth.shape[1]
    if not 0 <= component < d:
        raise PlotDataError(
            f"component {component} out of range for {d}-component states"
        )
    if x_est.shape[1] != d or (x_pred.size and x_pred.shape[1] != d):
        raise PlotDataError("truth, estimate, and prediction disagree on the "
                            "number of state components")
    fig, ax = _new_figure(run_id)
    ax.plot(t_truth, x_truth[:, component], color="black", lw=1.4, label="truth")
    ax.plot(t_est, x_est[:, component], color="tab:red", lw=1.4,
            label="estimate (window)")
    if t_pred.size:
        ax.plot(t_pred, x_pred[:, component], color="tab:blue", lw=1.4,
                label="prediction")
    t_f = t_est[-1]
    ax.axvline(t_f, color="0.4", lw=1.0, ls="--")
    ax.set_xlabel("time")
    ax.set_ylabel(f"$x_{{{component}}}$")
    ax.set_title(f"Component {component}: estimate and prediction")
    ax.legend(frameon=False, fontsize=9)
    return fig
