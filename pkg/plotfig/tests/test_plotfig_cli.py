"""Entry points: exit codes, output locations, and figure regeneration."""

import hashlib
import json
import shutil
from pathlib import Path

import pytest
from PIL import Image

from plotfig import io
from plotfig.cli import main_action_levels, main_param, main_timeseries

REPO_DESK_RUN = Path(__file__).resolve().parents[2] / "runs" / "desk_d20_l12"

ACTIONS_LINE = ",".join(io.ACTIONS_HEADER)


def png_size(path):
    with Image.open(path) as img:
        return img.size


def sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class TestActionLevels:
    def test_default_output_next_to_input(self, tiny_run, capsys):
        rc = main_action_levels([str(tiny_run / "actions.csv")])
        out = tiny_run / "action_levels.png"
        assert rc == 0
        assert out.stat().st_size > 0
        assert str(out) in capsys.readouterr().out

    def test_out_flag(self, tiny_run, tmp_path):
        out = tmp_path / "sub.png"
        rc = main_action_levels([str(tiny_run / "actions.csv"),
                                 "--out", str(out)])
        assert rc == 0
        assert out.stat().st_size > 0

    def test_empty_input_fails_without_image(self, tiny_run, tmp_path, capsys):
        csv = tmp_path / "actions.csv"
        csv.write_text(ACTIONS_LINE + "\n")
        shutil.copy(tiny_run / "meta.json", tmp_path / "meta.json")
        rc = main_action_levels([str(csv)])
        assert rc == 1
        assert "no data rows" in capsys.readouterr().err
        assert not (tmp_path / "action_levels.png").exists()

    def test_missing_input_fails(self, tmp_path, capsys):
        rc = main_action_levels([str(tmp_path / "absent.csv")])
        assert rc == 1
        assert capsys.readouterr().err

    def test_missing_meta_fails_and_explicit_meta_recovers(
            self, tiny_run, tmp_path, capsys):
        csv = tmp_path / "actions.csv"
        shutil.copy(tiny_run / "actions.csv", csv)
        rc = main_action_levels([str(csv)])
        assert rc == 1
        assert "--meta" in capsys.readouterr().err
        assert not (tmp_path / "action_levels.png").exists()
        rc = main_action_levels([str(csv), "--meta",
                                 str(tiny_run / "meta.json")])
        assert rc == 0
        assert (tmp_path / "action_levels.png").stat().st_size > 0

    def test_unwritable_output_fails(self, tiny_run, tmp_path, capsys):
        out = tmp_path / "no_such_dir" / "a.png"
        rc = main_action_levels([str(tiny_run / "actions.csv"),
                                 "--out", str(out)])
        assert rc == 1
        assert "cannot write" in capsys.readouterr().err

    def test_inputs_left_unmodified(self, tiny_run, tmp_path):
        csv = tiny_run / "actions.csv"
        before = sha256(csv)
        assert main_action_levels([str(csv), "--out",
                                   str(tmp_path / "a.png")]) == 0
        assert sha256(csv) == before

    def test_regenerated_image_has_identical_dimensions(
            self, tiny_run, tmp_path):
        first, second = tmp_path / "one.png", tmp_path / "two.png"
        for out in (first, second):
            rc = main_action_levels([str(tiny_run / "actions.csv"),
                                     "--out", str(out)])
            assert rc == 0
        assert png_size(first) == png_size(second)

    def test_usage_error_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main_action_levels([])
        assert exc.value.code == 1


class TestParam:
    def test_scatter_default(self, tiny_run):
        rc = main_param([str(tiny_run / "params.csv")])
        assert rc == 0
        assert (tiny_run / "param_scatter.png").stat().st_size > 0

    def test_mean_std_mode(self, tiny_run):
        rc = main_param([str(tiny_run / "params.csv"), "--mode", "mean_std"])
        assert rc == 0
        assert (tiny_run / "param_mean_std.png").stat().st_size > 0

    def test_unknown_mode_exits_one(self, tiny_run):
        with pytest.raises(SystemExit) as exc:
            main_param([str(tiny_run / "params.csv"), "--mode", "violin"])
        assert exc.value.code == 1


class TestTimeseries:
    def run(self, tiny_run, component, out):
        return main_timeseries([
            str(tiny_run / "truth.csv"),
            str(tiny_run / "est_path.csv"),
            str(tiny_run / "prediction.csv"),
            "--component", str(component),
            "--out", str(out),
        ])

    def test_observed_and_unobserved_components(self, tiny_run, tmp_path):
        # observed component 0 and unobserved component 1 both render
        for c in (0, 1):
            out = tmp_path / f"ts{c}.png"
            assert self.run(tiny_run, c, out) == 0
            assert out.stat().st_size > 0

    def test_default_name_carries_component(self, tiny_run):
        rc = main_timeseries([
            str(tiny_run / "truth.csv"),
            str(tiny_run / "est_path.csv"),
            str(tiny_run / "prediction.csv"),
            "--component", "2",
        ])
        assert rc == 0
        assert (tiny_run / "timeseries_x2.png").stat().st_size > 0

    def test_component_out_of_range_exits_one(self, tiny_run, tmp_path, capsys):
        out = tmp_path / "bad.png"
        rc = self.run(tiny_run, 99, out)
        assert rc == 1
        assert "out of range" in capsys.readouterr().err
        assert not out.exists()

    def test_component_flag_required(self, tiny_run):
        with pytest.raises(SystemExit) as exc:
            main_timeseries([str(tiny_run / "truth.csv"),
                             str(tiny_run / "est_path.csv"),
                             str(tiny_run / "prediction.csv")])
        assert exc.value.code == 1

    def test_zero_length_prediction_renders_window_only(
            self, tiny_run, tmp_path):
        pred = tmp_path / "prediction.csv"
        header = (tiny_run / "prediction.csv").read_text().splitlines()[0]
        pred.write_text(header + "\n")
        rc = main_timeseries([
            str(tiny_run / "truth.csv"),
            str(tiny_run / "est_path.csv"),
            str(pred),
            "--component", "0",
            "--out", str(tmp_path / "ts.png"),
        ])
        assert rc == 0
        assert (tmp_path / "ts.png").stat().st_size > 0


@pytest.mark.skipif(
    not REPO_DESK_RUN.exists(),
    reason="desk-scale run outputs not present; regenerate with "
           "'pamc twin --config configs/desk_d20_l12.yaml --out runs/desk_d20_l12'",
)
class TestFigureRegeneration:
    """All three scripts consume the checked-in desk-scale run's CSVs."""

    def test_figure_regeneration(self, tmp_path):
        run_id = json.loads(
            (REPO_DESK_RUN / "meta.json").read_text())["_meta"]["run_id"]
        jobs = [
            ("action levels",
             main_action_levels,
             [str(REPO_DESK_RUN / "actions.csv"),
              "--out", str(tmp_path / "action_levels.png")]),
            ("forcing scatter",
             main_param,
             [str(REPO_DESK_RUN / "params.csv"),
              "--out", str(tmp_path / "param_scatter.png")]),
            ("forcing mean and spread",
             main_param,
             [str(REPO_DESK_RUN / "params.csv"), "--mode", "mean_std",
              "--out", str(tmp_path / "param_mean_std.png")]),
            ("observed component series",
             main_timeseries,
             [str(REPO_DESK_RUN / "truth.csv"),
              str(REPO_DESK_RUN / "est_path.csv"),
              str(REPO_DESK_RUN / "prediction.csv"),
              "--component", "1",
              "--out", str(tmp_path / "timeseries_x1.png")]),
            ("unobserved component series",
             main_timeseries,
             [str(REPO_DESK_RUN / "truth.csv"),
              str(REPO_DESK_RUN / "est_path.csv"),
              str(REPO_DESK_RUN / "prediction.csv"),
              "--component", "19",
              "--out", str(tmp_path / "timeseries_x19.png")]),
        ]
        sizes = {}
        for label, entry, argv in jobs:
            rc = entry(argv)
            out = Path(argv[argv.index("--out") + 1])
            assert rc == 0, f"{label}: exit code {rc}"
            assert out.stat().st_size > 0, f"{label}: empty image"
            sizes[label] = png_size(out)
        assert len(set(sizes.values())) == 1
        print(f"[PASS] figure regeneration: {len(jobs)} images from run "
              f"{run_id}, all {sizes['action levels'][0]}x"
              f"{sizes['action levels'][1]} px, exit 0")
