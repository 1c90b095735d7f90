"""Command-line behavior: subcommands, config plumbing, exit codes."""

import numpy as np
import pytest

from dfdkit import io as dfdio
from dfdkit.cli import main
from dfdkit.experiment import parse_curves


def run(*argv):
    return main(list(argv))


@pytest.fixture
def synth_pair(tmp_path):
    """Small scene triple on disk plus the flags that reproduce its grid.

    Depth 2.0 keeps the defocus small enough (total blur ~2.9) that the
    8-bit quantization of both files costs only a few percent of depth.
    """
    out = tmp_path / "scene"
    flags = ["--cell-width", "32", "--cell-height", "32"]
    rc = run("synth", "--planes", "2.0", "--width", "64",
             "--height", "64", "--period", "32", "--out", str(out), *flags)
    assert rc == 0
    return {
        "original": out / "scene_original.pgm",
        "defocused": out / "scene_defocused.pgm",
        "gt": out / "scene_gt_depth.txt",
        "flags": flags,
    }


class TestCurvesCommand:
    def test_default_grid(self, tmp_path):
        out = tmp_path / "run"
        assert run("curves", "--out", str(out)) == 0
        parsed = parse_curves(out / "curves.csv")
        assert len(parsed["sigma"]) == 200
        assert parsed["sigma"][0] == 0.05 and parsed["sigma"][-1] == 10.0

    def test_writes_resolved_config(self, tmp_path):
        out = tmp_path / "run"
        assert run("curves", "--sigma1", "2.0", "--grid-stop", "1.0",
                   "--out", str(out)) == 0
        text = (out / "config.resolved").read_text()
        assert "sigma1=2.0" in text.splitlines()

    def test_config_file_and_flag_precedence(self, tmp_path):
        cfgfile = tmp_path / "run.cfg"
        cfgfile.write_text("sigma1=2.0\nsigma_min=0.7\n")
        out = tmp_path / "run"
        assert run("curves", "--config", str(cfgfile), "--sigma-min", "0.8",
                   "--grid-stop", "1.0", "--out", str(out)) == 0
        lines = (out / "config.resolved").read_text().splitlines()
        assert "sigma1=2.0" in lines      # from file
        assert "sigma_min=0.8" in lines   # flag wins

    def test_env_var_sets_out_dir(self, tmp_path, monkeypatch):
        envdir = tmp_path / "from_env"
        monkeypatch.setenv("DFDKIT_OUT", str(envdir))
        assert run("curves", "--grid-stop", "1.0") == 0
        assert (envdir / "curves.csv").is_file()

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DFDKIT_OUT", str(tmp_path / "from_env"))
        flagdir = tmp_path / "from_flag"
        assert run("curves", "--grid-stop", "1.0", "--out", str(flagdir)) == 0
        assert (flagdir / "curves.csv").is_file()
        assert not (tmp_path / "from_env").exists()


class TestSynthCommand:
    def test_outputs_and_determinism(self, tmp_path):
        args = ("synth", "--planes", "2.0,6.0", "--width", "64", "--height",
                "64", "--period", "32", "--cell-width", "32",
                "--cell-height", "32")
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(*args, "--out", str(a)) == 0
        assert run(*args, "--out", str(b)) == 0
        for name in ("scene_original.pgm", "scene_defocused.pgm",
                     "scene_gt_depth.txt"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_gt_has_both_planes(self, tmp_path):
        out = tmp_path / "run"
        assert run("synth", "--planes", "2.0,6.0", "--width", "64",
                   "--height", "64", "--period", "32", "--cell-width", "32",
                   "--cell-height", "32", "--out", str(out)) == 0
        gt = dfdio.load_depth_text(out / "scene_gt_depth.txt")
        assert set(np.unique(gt)) == {2.0, 6.0}

    def test_bad_planes(self, tmp_path):
        assert run("synth", "--planes", "2,x",
                   "--out", str(tmp_path / "r")) == 3
        assert run("synth", "--planes", ",",
                   "--out", str(tmp_path / "r2")) == 3


class TestDfdCommand:
    def test_depth_and_report(self, tmp_path, synth_pair):
        out = tmp_path / "run"
        rc = run("dfd", str(synth_pair["original"]),
                 str(synth_pair["defocused"]), "--gt", str(synth_pair["gt"]),
                 "--out", str(out), *synth_pair["flags"])
        assert rc == 0
        depth = dfdio.load_depth_text(out / "scene_original_depth.txt")
        assert depth.shape == (2, 2)
        assert np.allclose(depth, 2.0, rtol=0.08)
        report = dict(line.split("=", 1) for line
                      in (out / "report.txt").read_text().splitlines())
        assert float(report["mare"]) < 0.08
        assert report["covered_cells"] == "4"
        assert (out / "scene_original_vis.pgm").is_file()

    def test_report_without_gt_has_no_mare(self, tmp_path, synth_pair):
        out = tmp_path / "run"
        rc = run("dfd", str(synth_pair["original"]),
                 str(synth_pair["defocused"]), "--out", str(out),
                 *synth_pair["flags"])
        assert rc == 0
        assert "mare=" not in (out / "report.txt").read_text()


class TestMeasureCommand:
    def test_points_csv(self, tmp_path, synth_pair):
        out = tmp_path / "run"
        rc = run("measure", str(synth_pair["original"]),
                 str(synth_pair["defocused"]), "--out", str(out),
                 *synth_pair["flags"])
        assert rc == 0
        lines = (out / "points.csv").read_text().splitlines()
        assert lines[0] == ("x,y,normal_angle,m1,m2,sigma1_hat,sigma2_hat,"
                            "sigma_obj,depth_hat,flags")
        assert len(lines) > 50
        row = lines[1].split(",")
        assert len(row) == 10
        assert float(row[8]) > 0  # depth column parses


class TestEvalCommand:
    def test_manifest_run(self, tmp_path, synth_pair):
        data = tmp_path / "data"
        data.mkdir()
        (synth_pair["original"].rename(data / "img0.pgm"))
        (synth_pair["gt"].rename(data / "gt0.txt"))
        (data / "manifest.txt").write_text("s0 img0.pgm gt0.txt\n# note\n")
        out = tmp_path / "run"
        rc = run("eval", str(data), "--out", str(out), *synth_pair["flags"])
        assert rc == 0
        report = (out / "report.txt").read_text()
        assert "mean_mare=" in report
        assert "mare_s0=" in report
        assert "reference_mean_mare=0.275" in report
        assert (out / "s0_depth.txt").is_file()
        assert (out / "s0_vis.pgm").is_file()

    def test_failures_reported(self, tmp_path, synth_pair):
        data = tmp_path / "data"
        data.mkdir()
        (synth_pair["original"].rename(data / "img0.pgm"))
        (synth_pair["gt"].rename(data / "gt0.txt"))
        (data / "manifest.txt").write_text(
            "s0 img0.pgm gt0.txt\nmissing nope.pgm nope.txt\n")
        out = tmp_path / "run"
        rc = run("eval", str(data), "--out", str(out), *synth_pair["flags"])
        assert rc == 0
        report = (out / "report.txt").read_text()
        assert "images_failed=1" in report
        assert "failure_0=missing" in report

    def test_empty_manifest(self, tmp_path):
        m = tmp_path / "manifest.txt"
        m.write_text("# nothing\n")
        assert run("eval", str(m), "--out", str(tmp_path / "r")) == 2

    def test_malformed_manifest(self, tmp_path):
        m = tmp_path / "manifest.txt"
        m.write_text("too few\n")
        assert run("eval", str(m), "--out", str(tmp_path / "r")) == 2


class TestExitCodes:
    def test_no_arguments_is_usage_error(self):
        assert run() == 1

    def test_unknown_subcommand(self):
        assert run("frobnicate") == 1

    def test_unparseable_typed_flag(self, tmp_path):
        assert run("curves", "--grid-start", "abc",
                   "--out", str(tmp_path / "r")) == 1

    def test_missing_input_file(self, tmp_path):
        assert run("dfd", "no.pgm", "nope.pgm",
                   "--out", str(tmp_path / "r")) == 2

    def test_unreadable_config_file(self, tmp_path):
        assert run("curves", "--config", str(tmp_path / "absent.cfg"),
                   "--out", str(tmp_path / "r")) == 2

    def test_unknown_config_key(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("bogus_key=1\n")
        assert run("curves", "--config", str(cfg),
                   "--out", str(tmp_path / "r")) == 3

    def test_bad_config_value_via_flag(self, tmp_path):
        assert run("curves", "--sigma1", "oops",
                   "--out", str(tmp_path / "r")) == 3

    def test_bad_curve_grid(self, tmp_path):
        assert run("curves", "--grid-start", "-1",
                   "--out", str(tmp_path / "r")) == 3

    def test_help_exits_zero(self, capsys):
        assert run("--help") == 0
        assert "curves" in capsys.readouterr().out
