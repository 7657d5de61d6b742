"""Readers and figure builders on synthetic CSVs and a small real run."""

import json

import matplotlib.pyplot as plt
import numpy as np
import pytest
from PIL import Image

from plotfig import figures, io
from plotfig.io import PlotDataError

ACTIONS_LINE = ",".join(io.ACTIONS_HEADER)
PARAMS_LINE = ",".join(io.PARAMS_HEADER)


def write_text(path, *lines):
    path.write_text("\n".join(lines) + "\n")
    return path


class TestReaders:
    def test_missing_file(self, tmp_path):
        with pytest.raises(PlotDataError, match="cannot read"):
            io.read_actions(tmp_path / "absent.csv")

    def test_zero_byte_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(PlotDataError, match="empty, no header"):
            io.read_actions(p)

    def test_header_only_actions(self, tmp_path):
        p = write_text(tmp_path / "a.csv", ACTIONS_LINE)
        with pytest.raises(PlotDataError, match="no data rows"):
            io.read_actions(p)

    def test_wrong_header(self, tmp_path):
        p = write_text(tmp_path / "a.csv", "beta,q,action", "0,0,1.0")
        with pytest.raises(PlotDataError, match="unexpected header"):
            io.read_actions(p)

    def test_short_row(self, tmp_path):
        p = write_text(tmp_path / "a.csv", ACTIONS_LINE, "0,0,1.0")
        with pytest.raises(PlotDataError):
            io.read_actions(p)

    def test_non_numeric_cell(self, tmp_path):
        p = write_text(tmp_path / "p.csv", PARAMS_LINE, "0,0,oops")
        with pytest.raises(PlotDataError, match="non-numeric"):
            io.read_params(p)

    def test_actions_roundtrip(self, tmp_path):
        p = write_text(tmp_path / "a.csv", ACTIONS_LINE,
                       "0,0,1.0,2.5,2.0,0.5,0.4,100",
                       "1,0,1.4,3.5,3.0,0.5,0.3,90")
        table = io.read_actions(p)
        assert table.shape == (2, 8)
        assert table[1, 3] == 3.5

    def test_trajectory_reads_times_and_states(self, tmp_path):
        p = write_text(tmp_path / "t.csv", "step,time,x0,x1",
                       "0,0.0,1.0,2.0", "1,0.5,3.0,4.0")
        times, states = io.read_trajectory(p)
        assert times.tolist() == [0.0, 0.5]
        assert states.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_trajectory_state_column_names_checked(self, tmp_path):
        p = write_text(tmp_path / "t.csv", "step,time,x0,x2", "0,0.0,1.0,2.0")
        with pytest.raises(PlotDataError, match="x0..x1"):
            io.read_trajectory(p)

    def test_trajectory_empty_rejected_by_default(self, tmp_path):
        p = write_text(tmp_path / "t.csv", "step,time,x0,x1")
        with pytest.raises(PlotDataError, match="no data rows"):
            io.read_trajectory(p)

    def test_trajectory_allow_empty(self, tmp_path):
        p = write_text(tmp_path / "t.csv", "step,time,x0,x1")
        times, states = io.read_trajectory(p, allow_empty=True)
        assert times.shape == (0,)
        assert states.shape == (0, 2)

    def test_est_paths_picks_mean_rows_in_step_order(self, tmp_path):
        p = write_text(tmp_path / "e.csv", "q,step,time,x0",
                       "0,0,0.0,9.0", "0,1,0.5,9.5",
                       "-1,1,0.5,2.0", "-1,0,0.0,1.0")
        times, states = io.read_est_paths(p)
        assert times.tolist() == [0.0, 0.5]
        assert states[:, 0].tolist() == [1.0, 2.0]

    def test_est_paths_requires_mean_rows(self, tmp_path):
        p = write_text(tmp_path / "e.csv", "q,step,time,x0", "0,0,0.0,9.0")
        with pytest.raises(PlotDataError, match="ensemble-mean"):
            io.read_est_paths(p)

    def test_run_id_from_sibling_meta(self, tmp_path):
        csv = write_text(tmp_path / "a.csv", ACTIONS_LINE)
        (tmp_path / "meta.json").write_text(
            json.dumps({"_meta": {"run_id": "abc123"}}))
        assert io.resolve_run_id(None, csv) == "abc123"

    def test_run_id_from_explicit_meta(self, tmp_path):
        meta = tmp_path / "elsewhere.json"
        meta.write_text(json.dumps({"_meta": {"run_id": "zzz"}}))
        assert io.resolve_run_id(meta, tmp_path / "a.csv") == "zzz"

    def test_run_id_missing_meta_names_the_flag(self, tmp_path):
        with pytest.raises(PlotDataError, match="--meta"):
            io.resolve_run_id(None, tmp_path / "a.csv")

    def test_run_id_invalid_json(self, tmp_path):
        meta = tmp_path / "meta.json"
        meta.write_text("{not json")
        with pytest.raises(PlotDataError, match="not valid JSON"):
            io.resolve_run_id(meta, tmp_path / "a.csv")

    def test_run_id_missing_field(self, tmp_path):
        meta = tmp_path / "meta.json"
        meta.write_text(json.dumps({"seed": 5}))
        with pytest.raises(PlotDataError, match="run_id"):
            io.resolve_run_id(meta, tmp_path / "a.csv")


class TestFigureBuilders:
    def test_action_levels_from_real_run(self, tiny_run):
        table = io.read_actions(tiny_run / "actions.csv")
        fig = figures.plot_action_levels(table, "rid42")
        try:
            ax = fig.axes[0]
            assert ax.get_yscale() == "log"
            # one dot per (chain, rung) plus the two mean error lines
            assert ax.collections[0].get_offsets().shape[0] == table.shape[0]
            assert len(ax.lines) == 2
            assert any("run rid42" in t.get_text() for t in fig.texts)
        finally:
            plt.close(fig)

    def test_single_row_gives_one_point(self, tmp_path):
        p = write_text(tmp_path / "a.csv", ACTIONS_LINE,
                       "0,0,1.0,2.5,2.0,0.5,0.4,100")
        fig = figures.plot_action_levels(io.read_actions(p), "r")
        try:
            assert fig.axes[0].collections[0].get_offsets().shape[0] == 1
        finally:
            plt.close(fig)

    def test_param_scatter_and_mean_coincide_for_single_chain(self, tmp_path):
        rows = [f"{b},0,{8.0 + 0.1 * b}" for b in range(4)]
        p = write_text(tmp_path / "p.csv", PARAMS_LINE, *rows)
        table = io.read_params(p)
        fig_s = figures.plot_param(table, "r", mode="scatter")
        fig_m = figures.plot_param(table, "r", mode="mean_std")
        try:
            pts = fig_s.axes[0].collections[0].get_offsets()
            mean_line = fig_m.axes[0].lines[0]
            assert np.array_equal(np.asarray(pts)[:, 1], mean_line.get_ydata())
        finally:
            plt.close(fig_s)
            plt.close(fig_m)

    def test_constant_param_gives_flat_line_zero_band(self, tmp_path):
        rows = [f"{b},{q},8.17" for b in range(3) for q in range(2)]
        p = write_text(tmp_path / "p.csv", PARAMS_LINE, *rows)
        fig = figures.plot_param(io.read_params(p), "r", mode="mean_std")
        try:
            ax = fig.axes[0]
            assert np.all(ax.lines[0].get_ydata() == 8.17)
            band = ax.collections[0].get_paths()[0].vertices
            assert np.all(band[:, 1] == 8.17)
        finally:
            plt.close(fig)

    def test_param_rejects_unknown_mode(self, tmp_path):
        p = write_text(tmp_path / "p.csv", PARAMS_LINE, "0,0,8.0")
        with pytest.raises(PlotDataError, match="mode"):
            figures.plot_param(io.read_params(p), "r", mode="violin")

    def test_timeseries_from_real_run(self, tiny_run):
        truth = io.read_trajectory(tiny_run / "truth.csv")
        est = io.read_est_paths(tiny_run / "est_path.csv")
        pred = io.read_trajectory(tiny_run / "prediction.csv", allow_empty=True)
        fig = figures.plot_timeseries(truth, est, pred, 1, "rid7")
        try:
            ax = fig.axes[0]
            # truth, estimate, prediction, and the window-end rule
            assert len(ax.lines) == 4
            rule = ax.lines[-1]
            assert rule.get_xdata()[0] == est[0][-1]
            assert any("run rid7" in t.get_text() for t in fig.texts)
        finally:
            plt.close(fig)

    def test_timeseries_zero_length_prediction(self, tiny_run):
        truth = io.read_trajectory(tiny_run / "truth.csv")
        est = io.read_est_paths(tiny_run / "est_path.csv")
        d = truth[1].shape[1]
        empty = (np.empty(0), np.empty((0, d)))
        fig = figures.plot_timeseries(truth, est, empty, 0, "r")
        try:
            # truth, estimate, and the rule; no prediction line
            assert len(fig.axes[0].lines) == 3
        finally:
            plt.close(fig)

    def test_timeseries_component_out_of_range(self, tiny_run):
        truth = io.read_trajectory(tiny_run / "truth.csv")
        est = io.read_est_paths(tiny_run / "est_path.csv")
        d = truth[1].shape[1]
        empty = (np.empty(0), np.empty((0, d)))
        for bad in (-1, d):
            with pytest.raises(PlotDataError, match="out of range"):
                figures.plot_timeseries(truth, est, empty, bad, "r")

    def test_timeseries_dimension_mismatch(self, tiny_run):
        truth = io.read_trajectory(tiny_run / "truth.csv")
        est = io.read_est_paths(tiny_run / "est_path.csv")
        narrow = (est[0], est[1][:, :-1])
        d = truth[1].shape[1]
        empty = (np.empty(0), np.empty((0, d)))
        with pytest.raises(PlotDataError, match="disagree"):
            figures.plot_timeseries(truth, narrow, empty, 0, "r")

    def test_all_figures_share_pixel_dimensions(self, tiny_run, tmp_path):
        actions = io.read_actions(tiny_run / "actions.csv")
        params = io.read_params(tiny_run / "params.csv")
        sizes = set()
        for name, fig in [
            ("a.png", figures.plot_action_levels(actions, "r")),
            ("p.png", figures.plot_param(params, "r")),
        ]:
            out = tmp_path / name
            fig.savefig(out)
            plt.close(fig)
            with Image.open(out) as img:
                sizes.add(img.size)
        expected = (int(figures.FIGSIZE[0] * figures.DPI),
                    int(figures.FIGSIZE[1] * figures.DPI))
        assert sizes == {expected}
