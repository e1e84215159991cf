import json
import os

import pytest

from harbench import cli


@pytest.fixture(scope="module")
def spec_file(tmp_path_factory):
    """Tiny two-user synthetic spec for end-to-end command runs."""
    cfg = {
        "seed": 3,
        "samples_per_class": 400,
        "classes": [
            {"label": 1, "frequency": 0.5, "mean": 2.0, "noise_sigma": 0.25},
            {"label": 2, "frequency": 1.2, "mean": 4.0, "noise_sigma": 0.25},
            {"label": 3, "frequency": 1.9, "mean": 6.0, "noise_sigma": 0.25},
        ],
        "users": [{"id": 1, "offset": 0.0}, {"id": 2, "offset": 0.1}],
    }
    path = tmp_path_factory.mktemp("spec") / "spec.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def run(argv):
    return cli.main(argv)


class TestParser:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["--help"])
        assert exc.value.code == 0
        assert "sweep" in capsys.readouterr().out

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run(["sweep", "--no-such-flag"])
        assert exc.value.code == 2

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run([])
        assert exc.value.code == 2


class TestValidate:
    def test_missing_data_dir_exits_three(self, capsys, tmp_path):
        assert run(["validate", "--data-dir", str(tmp_path / "nope")]) == \
            cli.EXIT_MISSING_DATA
        assert "error" in capsys.readouterr().err

    def test_empty_data_dir_exits_three(self, capsys, tmp_path):
        assert run(["validate", "--data-dir", str(tmp_path)]) == \
            cli.EXIT_MISSING_DATA


class TestGridValidation:
    def test_off_grid_window_rejected(self, capsys, spec_file, tmp_path):
        code = run(["sweep", "--synthetic", spec_file, "--seed", "0",
                    "--windows", "73", "--overlaps", "0.0",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_BAD_GRID
        assert "allow-any-grid" in capsys.readouterr().err

    def test_off_grid_overlap_rejected(self, capsys, spec_file, tmp_path):
        code = run(["sweep", "--synthetic", spec_file, "--seed", "0",
                    "--windows", "100", "--overlaps", "0.35",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_BAD_GRID

    def test_unparseable_grid(self, capsys, spec_file, tmp_path):
        code = run(["sweep", "--synthetic", spec_file, "--seed", "0",
                    "--windows", "abc", "--overlaps", "0.0",
                    "--out", str(tmp_path)])
        assert code == cli.EXIT_BAD_GRID

    def test_overlap_one_rejected_even_with_override(self, capsys, spec_file,
                                                     tmp_path):
        code = run(["sweep", "--synthetic", spec_file, "--seed", "0",
                    "--windows", "100", "--overlaps", "1.0",
                    "--allow-any-grid", "--out", str(tmp_path)])
        assert code == cli.EXIT_BAD_GRID


class TestSynth:
    def test_writes_one_file_per_user(self, capsys, spec_file, tmp_path):
        assert run(["synth", "--spec", spec_file,
                    "--out", str(tmp_path)]) == 0
        names = sorted(os.listdir(tmp_path))
        assert names == ["synthetic001.dat", "synthetic002.dat"]

    def test_round_trips_through_parser(self, spec_file, tmp_path):
        from harbench import dataset
        run(["synth", "--spec", spec_file, "--out", str(tmp_path)])
        stream = dataset.parse_subject_file(
            str(tmp_path / "synthetic002.dat"), 2)
        assert len(stream) == 3 * 400

    def test_bad_spec_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"seed": 1}')
        assert run(["synth", "--spec", str(bad),
                    "--out", str(tmp_path)]) == cli.EXIT_MISSING_DATA


class TestSweepCommand:
    def sweep_args(self, spec_file, out):
        return ["sweep", "--synthetic", spec_file, "--seed", "0",
                "--windows", "50", "--overlaps", "0.0,0.5",
                "--allow-any-grid", "--mode", "both",
                "--knn-capacity", "500", "--grace-period", "50",
                "--out", str(out)]

    def test_end_to_end(self, capsys, spec_file, tmp_path):
        assert run(self.sweep_args(spec_file, tmp_path)) == 0
        out = capsys.readouterr().out
        assert os.path.exists(tmp_path / "long.csv")
        assert os.path.exists(tmp_path / "summary.csv")
        assert "wrote" in out

    def test_resume_reports_identical(self, capsys, spec_file, tmp_path):
        run(self.sweep_args(spec_file, tmp_path))
        before = (tmp_path / "summary.csv").read_bytes()
        assert run(self.sweep_args(spec_file, tmp_path) + ["--resume"]) == 0
        assert (tmp_path / "summary.csv").read_bytes() == before

    def test_unwritable_out_exits_four(self, capsys, spec_file, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        code = run(self.sweep_args(spec_file, blocker / "sub"))
        assert code == cli.EXIT_UNWRITABLE


class TestEvalCommand:
    def test_single_cell_with_audit(self, capsys, spec_file, tmp_path):
        code = run(["eval", "--synthetic", spec_file, "--user", "2",
                    "--window", "50", "--overlap", "0.5", "--mode", "semi",
                    "--knn-capacity", "500", "--grace-period", "50",
                    "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "accuracy=" in out and "self_updates=" in out
        audit = (tmp_path / "audit_u2.csv").read_text().splitlines()
        assert audit[0] == "index,true_label,predicted_label,confidence,updated"
        assert len(audit) > 1

    def test_unknown_user_exits_three(self, capsys, spec_file):
        code = run(["eval", "--synthetic", spec_file, "--user", "7",
                    "--window", "50", "--overlap", "0.0"])
        assert code == cli.EXIT_MISSING_DATA


class TestProfileCommand:
    def test_grid_with_power_model(self, capsys, spec_file, tmp_path):
        power = tmp_path / "power.json"
        power.write_text('{"sampling_watts": 0.5, "feature_watts": 2.0, '
                         '"classification_watts": 1.5}')
        code = run(["profile", "--synthetic", spec_file,
                    "--windows", "50", "--overlaps", "0.0,0.5",
                    "--allow-any-grid", "--reps", "3",
                    "--knn-capacity", "500", "--grace-period", "50",
                    "--power-model", str(power), "--out", str(tmp_path)])
        assert code == 0
        timing = (tmp_path / "timing.csv").read_text().splitlines()
        assert len(timing) == 3  # header + 2 cells
        heat = (tmp_path / "energy_heatmap.csv").read_text().splitlines()
        assert heat[0].startswith("window_size,overlap,joules")
        assert len(heat) == 3
